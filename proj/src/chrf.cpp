#include "asymbpe/chrf.hpp"

#include <algorithm>
#include <unordered_map>

#include "asymbpe/error.hpp"
#include "asymbpe/utf8.hpp"

namespace asymbpe::chrf {

NGramStats& NGramStats::operator+=(const NGramStats& other) {
  if (orders.size() < other.orders.size()) orders.resize(other.orders.size());
  for (std::size_t i = 0; i < other.orders.size(); ++i) {
    orders[i].matched += other.orders[i].matched;
    orders[i].hyp_total += other.orders[i].hyp_total;
    orders[i].ref_total += other.orders[i].ref_total;
  }
  return *this;
}

NGramStats& NGramStats::operator-=(const NGramStats& other) {
  if (orders.size() < other.orders.size()) orders.resize(other.orders.size());
  for (std::size_t i = 0; i < other.orders.size(); ++i) {
    orders[i].matched -= other.orders[i].matched;
    orders[i].hyp_total -= other.orders[i].hyp_total;
    orders[i].ref_total -= other.orders[i].ref_total;
  }
  return *this;
}

namespace {

using Counter = std::unordered_map<std::string_view, std::int64_t>;

// n-grams over a sequence of contiguous units; each n-gram is the byte span
// from the first unit's start to the last unit's end.
Counter ngrams(const std::vector<std::string_view>& units, std::size_t n) {
  Counter out;
  if (units.size() < n) return out;
  for (std::size_t i = 0; i + n <= units.size(); ++i) {
    const char* begin = units[i].data();
    const char* end = units[i + n - 1].data() + units[i + n - 1].size();
    out[std::string_view(begin, static_cast<std::size_t>(end - begin))] += 1;
  }
  return out;
}

OrderCounts compare(const Counter& hyp, const Counter& ref) {
  OrderCounts c;
  for (const auto& [gram, n] : hyp) {
    c.hyp_total += n;
    auto it = ref.find(gram);
    if (it != ref.end()) c.matched += std::min(n, it->second);
  }
  for (const auto& [gram, n] : ref) c.ref_total += n;
  return c;
}

// Word n-grams need a canonical single-space join regardless of the original
// spacing, so words are copied into a normalized buffer first.
void normalized_words(std::string_view text, std::string& buffer, std::vector<std::string_view>& words) {
  auto raw = utf8::split_words(text);
  buffer.clear();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i > 0) buffer.push_back(' ');
    buffer += raw[i];
  }
  words.clear();
  std::size_t pos = 0;
  for (auto w : raw) {
    words.emplace_back(buffer.data() + pos, w.size());
    pos += w.size() + 1;
  }
}

}  // namespace

NGramStats sentence_stats(std::string_view hypothesis, std::string_view reference,
                          const ChrfParams& params) {
  if (params.char_order < 0 || params.word_order < 0 || params.orders() == 0) {
    throw Error("chrf: n-gram orders must be non-negative and not both zero");
  }
  NGramStats stats(params.orders());

  const std::string hyp_chars_text = utf8::strip_spaces(hypothesis);
  const std::string ref_chars_text = utf8::strip_spaces(reference);
  const auto hyp_chars = utf8::split_chars(hyp_chars_text);
  const auto ref_chars = utf8::split_chars(ref_chars_text);
  for (int n = 1; n <= params.char_order; ++n) {
    stats.orders[static_cast<std::size_t>(n - 1)] =
        compare(ngrams(hyp_chars, static_cast<std::size_t>(n)),
                ngrams(ref_chars, static_cast<std::size_t>(n)));
  }

  std::vector<std::string_view> hyp_words, ref_words;
  std::string hyp_buffer, ref_buffer;
  normalized_words(hypothesis, hyp_buffer, hyp_words);
  normalized_words(reference, ref_buffer, ref_words);
  for (int n = 1; n <= params.word_order; ++n) {
    stats.orders[static_cast<std::size_t>(params.char_order + n - 1)] =
        compare(ngrams(hyp_words, static_cast<std::size_t>(n)),
                ngrams(ref_words, static_cast<std::size_t>(n)));
  }
  return stats;
}

double score_from_totals(const NGramStats& totals, double beta) {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t effective = 0;
  for (const auto& o : totals.orders) {
    if (o.hyp_total == 0 && o.ref_total == 0) continue;
    ++effective;
    if (o.hyp_total > 0) precision += static_cast<double>(o.matched) / static_cast<double>(o.hyp_total);
    if (o.ref_total > 0) recall += static_cast<double>(o.matched) / static_cast<double>(o.ref_total);
  }
  if (effective == 0) return 0.0;
  precision /= static_cast<double>(effective);
  recall /= static_cast<double>(effective);
  if (precision + recall == 0.0) return 0.0;
  const double b2 = beta * beta;
  return 100.0 * (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

ChrfScore corpus_chrf(std::span<const NGramStats> stats, double beta) {
  if (stats.empty()) throw Error("corpus_chrf: empty corpus");
  ChrfScore score;
  score.beta = beta;
  for (const auto& s : stats) score.totals += s;
  score.value = score_from_totals(score.totals, beta);
  return score;
}

std::vector<NGramStats> corpus_stats_serial(std::span<const std::string> hypotheses,
                                            std::span<const std::string> references,
                                            const ChrfParams& params) {
  if (hypotheses.size() != references.size()) {
    throw Error("chrf: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                std::to_string(references.size()) + " references");
  }
  std::vector<NGramStats> out;
  out.reserve(hypotheses.size());
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    out.push_back(sentence_stats(hypotheses[i], references[i], params));
  }
  return out;
}

std::vector<NGramStats> corpus_stats(std::span<const std::string> hypotheses,
                                     std::span<const std::string> references,
                                     const ChrfParams& params) {
  if (hypotheses.size() != references.size()) {
    throw Error("chrf: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                std::to_string(references.size()) + " references");
  }
  // Validate once so no exception escapes the parallel region.
  (void)sentence_stats("", "", params);
  std::vector<NGramStats> out(hypotheses.size());
  const auto n = static_cast<std::ptrdiff_t>(hypotheses.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = sentence_stats(hypotheses[i], references[i], params);
  }
  return out;
}

ChrfScore corpus_chrf(std::span<const std::string> hypotheses, std::span<const std::string> references,
                      const ChrfParams& params) {
  auto stats = corpus_stats(hypotheses, references, params);
  return corpus_chrf(stats, params.beta);
}

std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::a: return "A";
    case Winner::b: return "B";
    case Winner::tie: return "tie";
  }
  return "tie";
}

}  // namespace asymbpe::chrf
