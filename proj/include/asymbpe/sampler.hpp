#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace asymbpe::sampling {

// Inclusive token-length interval; `upper` empty means open-ended.
struct LengthBin {
  std::size_t lower = 1;
  std::optional<std::size_t> upper;

  bool contains(std::size_t length) const;
  std::string label() const;  // "1-10", ">=41"

  bool operator==(const LengthBin&) const = default;
};

// Upper bounds used for the English-Hindi corpus: 1-10, 11-15, ..., 36-40, >=41.
inline const std::vector<std::size_t> kDefaultUpperBounds = {10, 15, 20, 25, 30, 35, 40};
inline constexpr std::size_t kDefaultGranularity = 10;

// Builds contiguous bins [1,u0], [u0+1,u1], ..., [u_last+1, inf).
// Bounds must be strictly increasing and positive.
std::vector<LengthBin> bins_from_upper_bounds(std::span<const std::size_t> upper_bounds);

// Index of the bin holding `length`. Length 0 (an empty line) falls into the
// first bin.
std::size_t bin_index(std::span<const LengthBin> bins, std::size_t length);

struct BinPlan {
  std::vector<LengthBin> bins;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  // Share of each bin in hundredths of a percent, rounded half up
  // (3413 == 34.13%). Quotas are computed from these rounded shares.
  std::vector<std::uint32_t> basis_points;

  static BinPlan from_counts(std::vector<LengthBin> bins, std::vector<std::size_t> counts);

  double percentage(std::size_t bin) const { return basis_points[bin] / 100.0; }
};

struct SamplePlan {
  std::size_t target_size = 0;
  std::vector<std::size_t> per_bin_quota;
  std::uint64_t seed = 0;
  std::size_t granularity = kDefaultGranularity;

  std::size_t total_quota() const;
};

struct ParallelCorpus {
  std::vector<std::string> source;
  std::vector<std::string> target;

  std::size_t size() const { return source.size(); }
};

// Throws when the two sides differ in length; the message names both counts.
ParallelCorpus make_parallel_corpus(std::vector<std::string> source, std::vector<std::string> target);
ParallelCorpus load_parallel_corpus(const std::filesystem::path& source,
                                    const std::filesystem::path& target);

// Assigns each pair to a bin by the whitespace token count of its source side.
BinPlan bin_histogram(const ParallelCorpus& corpus, std::vector<LengthBin> bins);

// quota[i] = floor(share[i] * target / 100 / granularity) * granularity,
// capped at the bin's count. `target == total` keeps every pair.
SamplePlan make_sample_plan(const BinPlan& plan, std::size_t target_size, std::uint64_t seed,
                            std::size_t granularity = kDefaultGranularity);

struct Sample {
  ParallelCorpus corpus;
  // Zero-based line numbers in the input corpus, in output order.
  std::vector<std::size_t> line_indices;
};

// Draws each bin's quota uniformly without replacement (partial Fisher-Yates
// driven by SplitMix64 seeded with plan.seed). Output is bin order, then draw
// order, so a fixed seed gives byte-identical files.
Sample draw_sample(const ParallelCorpus& corpus, std::span<const LengthBin> bins,
                   const SamplePlan& plan);

nlohmann::json to_json(const BinPlan& plan);
nlohmann::json to_json(const SamplePlan& plan, std::span<const LengthBin> bins);

}  // namespace asymbpe::sampling
