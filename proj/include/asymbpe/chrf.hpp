#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace asymbpe::chrf {

struct ChrfParams {
  int char_order = 6;
  int word_order = 2;
  double beta = 2.0;

  std::size_t orders() const { return static_cast<std::size_t>(char_order + word_order); }
};

struct OrderCounts {
  std::int64_t matched = 0;
  std::int64_t hyp_total = 0;
  std::int64_t ref_total = 0;

  bool operator==(const OrderCounts&) const = default;
};

// Per-order clipped match counts. Character orders 1..char_order come first,
// then word orders 1..word_order.
struct NGramStats {
  std::vector<OrderCounts> orders;

  NGramStats() = default;
  explicit NGramStats(std::size_t n) : orders(n) {}

  NGramStats& operator+=(const NGramStats& other);
  NGramStats& operator-=(const NGramStats& other);
  bool operator==(const NGramStats&) const = default;
};

struct ChrfScore {
  double value = 0.0;  // in [0, 100]
  double beta = 2.0;
  NGramStats totals;
};

// Character n-grams are taken over code points with whitespace removed; word
// n-grams over whitespace tokens.
NGramStats sentence_stats(std::string_view hypothesis, std::string_view reference,
                          const ChrfParams& params = {});

// Averages precision and recall over orders (an order empty on both sides is
// skipped, one empty on a single side contributes 0), then
// 100 * (1 + b^2) P R / (b^2 P + R).
double score_from_totals(const NGramStats& totals, double beta);

ChrfScore corpus_chrf(std::span<const NGramStats> stats, double beta = 2.0);

// Per-sentence statistics for a whole corpus. The OpenMP kernel and the
// serial reference produce identical vectors.
std::vector<NGramStats> corpus_stats(std::span<const std::string> hypotheses,
                                     std::span<const std::string> references,
                                     const ChrfParams& params = {});
std::vector<NGramStats> corpus_stats_serial(std::span<const std::string> hypotheses,
                                            std::span<const std::string> references,
                                            const ChrfParams& params = {});

ChrfScore corpus_chrf(std::span<const std::string> hypotheses, std::span<const std::string> references,
                      const ChrfParams& params = {});

enum class Winner { a, b, tie };

std::string_view to_string(Winner w);

inline constexpr std::string_view kSignificanceMethod = "paired approximate randomization";

struct SignificanceResult {
  double p_value = 1.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  Winner better_system = Winner::tie;
  double score_a = 0.0;
  double score_b = 0.0;
};

// Paired approximate randomization. Each iteration swaps every sentence's A
// and B statistics with probability 1/2 and counts how often the absolute
// score difference reaches the observed one; p = (count + 1) / (iterations + 1).
// Iteration i draws from SplitMix64(derive_seed(seed, i)), so the parallel
// kernel and the serial reference agree for any thread count.
SignificanceResult paired_significance(std::span<const NGramStats> a, std::span<const NGramStats> b,
                                       std::size_t iterations, std::uint64_t seed, double beta = 2.0);
SignificanceResult paired_significance_serial(std::span<const NGramStats> a,
                                              std::span<const NGramStats> b, std::size_t iterations,
                                              std::uint64_t seed, double beta = 2.0);

SignificanceResult paired_significance(std::span<const std::string> hyp_a,
                                       std::span<const std::string> hyp_b,
                                       std::span<const std::string> references, std::size_t iterations,
                                       std::uint64_t seed, const ChrfParams& params = {});

}  // namespace asymbpe::chrf
