#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace asymbpe::sweep {

// The eight merge-operation counts of the English-Hindi grid
// (0.5K, 1K, 2K, 4K, 8K, 16K, 25K, 32K).
inline const std::vector<std::size_t> kDefaultNmoSet = {500, 1000, 2000, 4000, 8000, 16000, 25000, 32000};

// Accepts "500", "0.5K", "16K", "25k". Throws on anything else.
std::size_t parse_nmo(std::string_view text);

// K-notation for multiples of 1000 ("16K"), fractional K above 1000 when
// exact ("1.5K"), plain integers otherwise ("500").
std::string format_nmo(std::size_t nmo);

struct BpeConfig {
  std::size_t src_nmo = 0;
  std::size_t tgt_nmo = 0;

  std::string label() const;  // "16K_500"
  static BpeConfig parse(std::string_view label);
  bool symmetric() const { return src_nmo == tgt_nmo; }

  auto operator<=>(const BpeConfig&) const = default;
};

enum class Symmetry { symmetric, asymmetric };

Symmetry classify(const BpeConfig& config);

// Cartesian product, source-major, in the order of `nmo_set`.
std::vector<BpeConfig> enumerate_grid(std::span<const std::size_t> nmo_set);

struct SystemResult {
  BpeConfig config;
  std::string direction;
  std::size_t dataset_size = 0;
  std::string testset;
  double score = 0.0;
  std::optional<double> p_vs_baseline;
};

struct TierEntry {
  SystemResult result;
  double delta = 0.0;  // score - baseline score, rounded to 2 decimals
};

struct TierReport {
  TierEntry low_a, low_b, baseline, high_b, high_a;

  // Rows in table order: Low A, Low B, Baseline, High B, High A.
  std::vector<std::pair<std::string, const TierEntry*>> rows() const;
};

enum class DeltaRounding {
  // Subtract at full precision, then round.
  after_subtract,
  // Round both scores to 2 decimals, then subtract.
  before_subtract,
};

struct TierOptions {
  DeltaRounding rounding = DeltaRounding::after_subtract;
  // Draw Low A/B from every non-baseline configuration instead of only the
  // asymmetric ones.
  bool lows_include_symmetric = false;
};

// Baseline = best symmetric system; High A/B = best two asymmetric; Low A/B =
// worst two asymmetric. Every slot resolves equal scores in favour of the
// smaller (src, tgt) configuration. Throws when the cell lacks a symmetric
// result or two asymmetric ones, mixes cells, or repeats a config.
TierReport tier_report(std::span<const SystemResult> results, const TierOptions& options = {});

double round2(double value);

// "*" for p < 0.01, "" otherwise; `bold` is p < 0.05.
struct SignificanceMarker {
  bool bold = false;
  std::string star;
};

SignificanceMarker significance_marker(std::optional<double> p);

// Tab-separated rows: tier, src, tgt, chrf, delta, bold, marker.
std::string format_tier_tsv(const TierReport& report, bool header = true);
// Column-aligned text with the same columns.
std::string format_tier_text(const TierReport& report);

// For each source NMO, the best score over all target NMOs (the stepped
// maximum line of the all-configuration plots).
struct MaxTracePoint {
  std::size_t src_nmo = 0;
  std::size_t best_tgt_nmo = 0;
  double max_score = 0.0;
};

std::vector<MaxTracePoint> max_trace(std::span<const SystemResult> results);

enum class ResourceBand { low, medium, high };

std::string_view to_string(ResourceBand band);

struct NmoRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

struct Recommendation {
  ResourceBand band = ResourceBand::low;
  NmoRange src_range;
  NmoRange tgt_range;
  std::string rationale;
};

// Thresholds interpolated from the English-Hindi results: below `medium_from`
// pairs is low-resource, at or above `high_from` is high-resource.
struct RecommendBands {
  std::size_t medium_from = 1'000'000;
  std::size_t high_from = 4'000'000;
  NmoRange low_src{4000, 32000};
  NmoRange low_tgt{500, 2000};
  NmoRange medium_src{2000, 8000};
  NmoRange medium_tgt{2000, 8000};
  NmoRange high_src{16000, 32000};
  NmoRange high_tgt{16000, 32000};
};

Recommendation recommend(std::size_t dataset_size, const RecommendBands& bands = {});

}  // namespace asymbpe::sweep
