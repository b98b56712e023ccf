#include "asymbpe/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "asymbpe/error.hpp"
#include "asymbpe/rng.hpp"
#include "asymbpe/text_io.hpp"
#include "asymbpe/utf8.hpp"

namespace asymbpe::sampling {

bool LengthBin::contains(std::size_t length) const {
  return length >= lower && (!upper || length <= *upper);
}

std::string LengthBin::label() const {
  if (!upper) return ">=" + std::to_string(lower);
  return std::to_string(lower) + "-" + std::to_string(*upper);
}

std::vector<LengthBin> bins_from_upper_bounds(std::span<const std::size_t> upper_bounds) {
  std::vector<LengthBin> bins;
  std::size_t lower = 1;
  for (std::size_t upper : upper_bounds) {
    if (upper < lower) throw Error("length bins: upper bounds must be positive and strictly increasing");
    bins.push_back(LengthBin{lower, upper});
    lower = upper + 1;
  }
  bins.push_back(LengthBin{lower, std::nullopt});
  return bins;
}

std::size_t bin_index(std::span<const LengthBin> bins, std::size_t length) {
  if (bins.empty()) throw Error("length bins: empty bin list");
  if (length < bins.front().lower) return 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].contains(length)) return i;
  }
  throw Error("length bins: no bin holds length " + std::to_string(length));
}

BinPlan BinPlan::from_counts(std::vector<LengthBin> bins, std::vector<std::size_t> counts) {
  if (bins.size() != counts.size()) throw Error("bin plan: bins and counts differ in size");
  BinPlan plan;
  plan.bins = std::move(bins);
  plan.counts = std::move(counts);
  plan.total = std::accumulate(plan.counts.begin(), plan.counts.end(), std::size_t{0});
  plan.basis_points.reserve(plan.counts.size());
  for (std::size_t c : plan.counts) {
    if (plan.total == 0) {
      plan.basis_points.push_back(0);
    } else {
      const unsigned __int128 num = static_cast<unsigned __int128>(c) * 20000 + plan.total;
      plan.basis_points.push_back(static_cast<std::uint32_t>(num / (2 * static_cast<unsigned __int128>(plan.total))));
    }
  }
  return plan;
}

std::size_t SamplePlan::total_quota() const {
  return std::accumulate(per_bin_quota.begin(), per_bin_quota.end(), std::size_t{0});
}

ParallelCorpus make_parallel_corpus(std::vector<std::string> source, std::vector<std::string> target) {
  if (source.size() != target.size()) {
    throw Error("parallel corpus: source has " + std::to_string(source.size()) + " lines but target has " +
                std::to_string(target.size()));
  }
  return ParallelCorpus{std::move(source), std::move(target)};
}

ParallelCorpus load_parallel_corpus(const std::filesystem::path& source,
                                    const std::filesystem::path& target) {
  return make_parallel_corpus(io::read_lines(source), io::read_lines(target));
}

BinPlan bin_histogram(const ParallelCorpus& corpus, std::vector<LengthBin> bins) {
  if (corpus.source.size() != corpus.target.size()) {
    throw Error("parallel corpus: source has " + std::to_string(corpus.source.size()) +
                " lines but target has " + std::to_string(corpus.target.size()));
  }
  std::vector<std::size_t> counts(bins.size(), 0);
  for (const auto& line : corpus.source) {
    ++counts[bin_index(bins, utf8::split_words(line).size())];
  }
  return BinPlan::from_counts(std::move(bins), std::move(counts));
}

SamplePlan make_sample_plan(const BinPlan& plan, std::size_t target_size, std::uint64_t seed,
                            std::size_t granularity) {
  if (target_size > plan.total) {
    throw Error("sample plan: target size " + std::to_string(target_size) + " exceeds corpus size " +
                std::to_string(plan.total));
  }
  if (granularity == 0) throw Error("sample plan: granularity must be at least 1");
  SamplePlan out;
  out.target_size = target_size;
  out.seed = seed;
  out.granularity = granularity;
  if (target_size == plan.total) {
    out.per_bin_quota = plan.counts;
    return out;
  }
  for (std::size_t i = 0; i < plan.counts.size(); ++i) {
    const std::uint64_t raw = static_cast<std::uint64_t>(plan.basis_points[i]) * target_size / 10000;
    const std::uint64_t quota = raw / granularity * granularity;
    out.per_bin_quota.push_back(std::min<std::size_t>(quota, plan.counts[i]));
  }
  return out;
}

Sample draw_sample(const ParallelCorpus& corpus, std::span<const LengthBin> bins,
                   const SamplePlan& plan) {
  if (plan.per_bin_quota.size() != bins.size()) throw Error("draw_sample: plan does not match bins");
  std::vector<std::vector<std::size_t>> members(bins.size());
  for (std::size_t i = 0; i < corpus.source.size(); ++i) {
    members[bin_index(bins, utf8::split_words(corpus.source[i]).size())].push_back(i);
  }

  SplitMix64 rng(plan.seed);
  Sample sample;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    auto& pool = members[b];
    const std::size_t quota = plan.per_bin_quota[b];
    if (quota > pool.size()) {
      throw Error("draw_sample: bin " + bins[b].label() + " needs " + std::to_string(quota) +
                  " pairs but holds " + std::to_string(pool.size()));
    }
    for (std::size_t k = 0; k < quota; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.uniform(pool.size() - k));
      std::swap(pool[k], pool[j]);
      sample.line_indices.push_back(pool[k]);
    }
  }
  sample.corpus.source.reserve(sample.line_indices.size());
  sample.corpus.target.reserve(sample.line_indices.size());
  for (std::size_t idx : sample.line_indices) {
    sample.corpus.source.push_back(corpus.source[idx]);
    sample.corpus.target.push_back(corpus.target[idx]);
  }
  return sample;
}

nlohmann::json to_json(const BinPlan& plan) {
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.bins.size(); ++i) {
    nlohmann::json b;
    b["bin"] = plan.bins[i].label();
    b["lower"] = plan.bins[i].lower;
    b["upper"] = plan.bins[i].upper ? nlohmann::json(*plan.bins[i].upper) : nlohmann::json(nullptr);
    b["count"] = plan.counts[i];
    b["percentage"] = plan.percentage(i);
    bins.push_back(std::move(b));
  }
  return nlohmann::json{{"bins", bins}, {"total", plan.total}};
}

nlohmann::json to_json(const SamplePlan& plan, std::span<const LengthBin> bins) {
  nlohmann::json quotas = nlohmann::json::array();
  for (std::size_t i = 0; i < plan.per_bin_quota.size(); ++i) {
    quotas.push_back({{"bin", i < bins.size() ? bins[i].label() : std::to_string(i)},
                      {"quota", plan.per_bin_quota[i]}});
  }
  return nlohmann::json{{"target_size", plan.target_size},
                        {"granularity", plan.granularity},
                        {"seed", plan.seed},
                        {"quotas", quotas},
                        {"total", plan.total_quota()},
                        {"rng", "splitmix64"}};
}

}  // namespace asymbpe::sampling
