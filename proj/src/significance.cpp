#include <algorithm>
#include <cmath>

#include "asymbpe/chrf.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/rng.hpp"

namespace asymbpe::chrf {

namespace {

// Score differences closer than this count as reaching the observed one, so
// identical systems give p = 1 regardless of summation order.
constexpr double kTieTolerance = 1e-9;

// Flattened (matched, hyp_total, ref_total) per order.
using Flat = std::vector<std::int64_t>;

Flat flatten(const NGramStats& s, std::size_t orders) {
  Flat f(orders * 3, 0);
  for (std::size_t o = 0; o < s.orders.size() && o < orders; ++o) {
    f[3 * o] = s.orders[o].matched;
    f[3 * o + 1] = s.orders[o].hyp_total;
    f[3 * o + 2] = s.orders[o].ref_total;
  }
  return f;
}

double score_flat(const std::int64_t* f, std::size_t orders, double beta) {
  double precision = 0.0, recall = 0.0;
  std::size_t effective = 0;
  for (std::size_t o = 0; o < orders; ++o) {
    const auto m = f[3 * o], h = f[3 * o + 1], r = f[3 * o + 2];
    if (h == 0 && r == 0) continue;
    ++effective;
    if (h > 0) precision += static_cast<double>(m) / static_cast<double>(h);
    if (r > 0) recall += static_cast<double>(m) / static_cast<double>(r);
  }
  if (effective == 0) return 0.0;
  precision /= static_cast<double>(effective);
  recall /= static_cast<double>(effective);
  if (precision + recall == 0.0) return 0.0;
  const double b2 = beta * beta;
  return 100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

struct Prepared {
  std::size_t orders = 0;
  std::size_t sentences = 0;
  Flat total_a, total_b;
  // Row i holds B_i - A_i; swapping sentence i adds it to A and subtracts it from B.
  std::vector<std::int64_t> diffs;
  double score_a = 0.0, score_b = 0.0, observed = 0.0;
};

Prepared prepare(std::span<const NGramStats> a, std::span<const NGramStats> b, std::size_t iterations,
                 double beta) {
  if (a.size() != b.size()) {
    throw Error("significance: system A has " + std::to_string(a.size()) + " sentences but system B has " +
                std::to_string(b.size()));
  }
  if (a.empty()) throw Error("significance: empty corpus");
  if (iterations == 0) throw Error("significance: iterations must be at least 1");
  Prepared p;
  for (const auto& s : a) p.orders = std::max(p.orders, s.orders.size());
  for (const auto& s : b) p.orders = std::max(p.orders, s.orders.size());
  p.sentences = a.size();
  const std::size_t width = p.orders * 3;
  p.total_a.assign(width, 0);
  p.total_b.assign(width, 0);
  p.diffs.assign(p.sentences * width, 0);
  for (std::size_t i = 0; i < p.sentences; ++i) {
    Flat fa = flatten(a[i], p.orders), fb = flatten(b[i], p.orders);
    for (std::size_t k = 0; k < width; ++k) {
      p.total_a[k] += fa[k];
      p.total_b[k] += fb[k];
      p.diffs[i * width + k] = fb[k] - fa[k];
    }
  }
  p.score_a = score_flat(p.total_a.data(), p.orders, beta);
  p.score_b = score_flat(p.total_b.data(), p.orders, beta);
  p.observed = std::fabs(p.score_a - p.score_b);
  return p;
}

// One randomization round; returns whether the shuffled difference is at
// least as extreme as the observed one.
bool shuffled_reaches_observed(const Prepared& p, std::size_t iteration, std::uint64_t seed, double beta,
                               Flat& ta, Flat& tb) {
  const std::size_t width = p.orders * 3;
  ta = p.total_a;
  tb = p.total_b;
  SplitMix64 rng(derive_seed(seed, iteration));
  std::uint64_t bits = 0;
  int left = 0;
  for (std::size_t i = 0; i < p.sentences; ++i) {
    if (left == 0) {
      bits = rng.next();
      left = 64;
    }
    const bool swap = bits & 1u;
    bits >>= 1;
    --left;
    if (!swap) continue;
    const std::int64_t* d = &p.diffs[i * width];
    for (std::size_t k = 0; k < width; ++k) {
      ta[k] += d[k];
      tb[k] -= d[k];
    }
  }
  const double diff = std::fabs(score_flat(ta.data(), p.orders, beta) - score_flat(tb.data(), p.orders, beta));
  return diff >= p.observed - kTieTolerance;
}

SignificanceResult finish(const Prepared& p, std::size_t reached, std::size_t iterations, std::uint64_t seed) {
  SignificanceResult r;
  r.iterations = iterations;
  r.seed = seed;
  r.score_a = p.score_a;
  r.score_b = p.score_b;
  r.p_value = static_cast<double>(reached + 1) / static_cast<double>(iterations + 1);
  if (p.observed <= kTieTolerance) {
    r.better_system = Winner::tie;
  } else {
    r.better_system = p.score_a > p.score_b ? Winner::a : Winner::b;
  }
  return r;
}

}  // namespace

SignificanceResult paired_significance_serial(std::span<const NGramStats> a,
                                              std::span<const NGramStats> b, std::size_t iterations,
                                              std::uint64_t seed, double beta) {
  const Prepared p = prepare(a, b, iterations, beta);
  Flat ta, tb;
  std::size_t reached = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    if (shuffled_reaches_observed(p, it, seed, beta, ta, tb)) ++reached;
  }
  return finish(p, reached, iterations, seed);
}

SignificanceResult paired_significance(std::span<const NGramStats> a, std::span<const NGramStats> b,
                                       std::size_t iterations, std::uint64_t seed, double beta) {
  const Prepared p = prepare(a, b, iterations, beta);
  std::size_t reached = 0;
  const auto n = static_cast<std::ptrdiff_t>(iterations);
#pragma omp parallel reduction(+ : reached)
  {
    Flat ta, tb;
#pragma omp for schedule(static)
    for (std::ptrdiff_t it = 0; it < n; ++it) {
      if (shuffled_reaches_observed(p, static_cast<std::size_t>(it), seed, beta, ta, tb)) ++reached;
    }
  }
  return finish(p, reached, iterations, seed);
}

SignificanceResult paired_significance(std::span<const std::string> hyp_a,
                                       std::span<const std::string> hyp_b,
                                       std::span<const std::string> references, std::size_t iterations,
                                       std::uint64_t seed, const ChrfParams& params) {
  if (hyp_a.size() != references.size() || hyp_b.size() != references.size()) {
    throw Error("significance: line counts differ (A " + std::to_string(hyp_a.size()) + ", B " +
                std::to_string(hyp_b.size()) + ", reference " + std::to_string(references.size()) + ")");
  }
  auto sa = corpus_stats(hyp_a, references, params);
  auto sb = corpus_stats(hyp_b, references, params);
  return paired_significance(sa, sb, iterations, seed, params.beta);
}

}  // namespace asymbpe::chrf
