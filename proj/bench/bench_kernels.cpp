// Serial reference vs OpenMP kernel for segmentation, CHRF++ statistics and
// the paired significance test.

#include <benchmark/benchmark.h>

#include "asymbpe/bpe.hpp"
#include "asymbpe/chrf.hpp"
#include "asymbpe/rng.hpp"
#include "support/corpora.hpp"

using namespace asymbpe;

namespace {

const std::vector<std::string>& corpus() {
  static const auto lines = testdata::mixed_script_corpus(20000, 1);
  return lines;
}

const bpe::Segmenter& segmenter() {
  static const bpe::Segmenter seg(bpe::learn_bpe(corpus(), 1000));
  return seg;
}

const std::vector<std::string>& hypotheses() {
  static const auto hyps = [] {
    SplitMix64 rng(2);
    std::vector<std::string> out;
    for (const auto& line : corpus()) {
      std::string h = line;
      if (!h.empty() && rng.uniform(2) == 0) h[rng.uniform(h.size())] = 'q';
      out.push_back(h);
    }
    return out;
  }();
  return hyps;
}

void BM_ApplySerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bpe::apply_corpus_serial(segmenter(), corpus()));
}

void BM_ApplyParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bpe::apply_corpus(segmenter(), corpus()));
}

void BM_ChrfStatsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(chrf::corpus_stats_serial(hypotheses(), corpus()));
}

void BM_ChrfStatsParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(chrf::corpus_stats(hypotheses(), corpus()));
}

const std::vector<chrf::NGramStats>& stats_a() {
  static const auto s = chrf::corpus_stats(hypotheses(), corpus());
  return s;
}

const std::vector<chrf::NGramStats>& stats_b() {
  static const auto s = chrf::corpus_stats(corpus(), corpus());
  return s;
}

void BM_SignificanceSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(chrf::paired_significance_serial(stats_a(), stats_b(), 200, 1));
}

void BM_SignificanceParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(chrf::paired_significance(stats_a(), stats_b(), 200, 1));
}

}  // namespace

BENCHMARK(BM_ApplySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApplyParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ChrfStatsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChrfStatsParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SignificanceSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SignificanceParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
