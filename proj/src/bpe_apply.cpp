#include <exception>
#include <limits>
#include <mutex>
#include <unordered_map>

#include "asymbpe/bpe.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/utf8.hpp"

namespace asymbpe::bpe {

namespace {

constexpr std::size_t kNoRank = std::numeric_limits<std::size_t>::max();

void append_pieces(std::string& out, const std::vector<Piece>& pieces) {
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += pieces[i].text;
    if (pieces[i].continuation) out += kContinuation;
  }
}

}  // namespace

std::string SegmentedSentence::to_string() const {
  std::string out;
  append_pieces(out, pieces);
  return out;
}

std::string SegmentedSentence::join() const {
  std::string out;
  bool glue = true;
  for (const auto& piece : pieces) {
    if (!glue) out.push_back(' ');
    out += piece.text;
    glue = piece.continuation;
  }
  if (!pieces.empty() && pieces.back().continuation) {
    throw Error("unsegment: dangling continuation at end of sentence");
  }
  return out;
}

std::string Segmenter::pair_key(const Symbol& left, const Symbol& right) {
  std::string key;
  key.reserve(left.text.size() + right.text.size() + 2);
  key += left.text;
  key.push_back('\0');
  key += right.text;
  key.push_back(right.word_final ? '\1' : '\0');
  return key;
}

Segmenter::Segmenter(const MergeTable& table) : nmo_(table.nmo()) {
  ranks_.reserve(table.rules.size());
  for (std::size_t r = 0; r < table.rules.size(); ++r) {
    ranks_.try_emplace(pair_key(table.rules[r].left, table.rules[r].right), r);
  }
}

std::vector<Piece> Segmenter::segment_word(std::string_view word) const {
  std::vector<Symbol> symbols = split_word(word);
  // Passing rank r over the word means every later candidate must have a
  // larger rank, which is what applying the rules in order amounts to.
  std::size_t last_applied = kNoRank;
  while (symbols.size() > 1) {
    std::size_t best = kNoRank;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = ranks_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it == ranks_.end()) continue;
      const std::size_t rank = it->second;
      if (last_applied != kNoRank && rank <= last_applied) continue;
      if (rank < best) best = rank;
    }
    if (best == kNoRank) break;

    // Find the pair again by rank; symbols with identical text are equal.
    Symbol left, right;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = ranks_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it != ranks_.end() && it->second == best) {
        left = symbols[i];
        right = symbols[i + 1];
        break;
      }
    }
    std::vector<Symbol> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size();) {
      if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
        merged.push_back(Symbol{symbols[i].text + symbols[i + 1].text, symbols[i + 1].word_final});
        i += 2;
      } else {
        merged.push_back(std::move(symbols[i]));
        ++i;
      }
    }
    symbols = std::move(merged);
    last_applied = best;
  }

  std::vector<Piece> pieces;
  pieces.reserve(symbols.size());
  for (auto& s : symbols) pieces.push_back(Piece{std::move(s.text), !s.word_final});
  return pieces;
}

SegmentedSentence Segmenter::segment(std::string_view sentence) const {
  SegmentedSentence out;
  for (auto word : utf8::split_words(sentence)) {
    auto pieces = segment_word(word);
    for (auto& p : pieces) out.pieces.push_back(std::move(p));
  }
  return out;
}

std::string Segmenter::segment_to_string(std::string_view sentence) const {
  std::string out;
  for (auto word : utf8::split_words(sentence)) {
    if (!out.empty()) out.push_back(' ');
    append_pieces(out, segment_word(word));
  }
  return out;
}

SegmentedSentence apply_bpe(const MergeTable& table, std::string_view sentence) {
  return Segmenter(table).segment(sentence);
}

std::string unsegment(std::string_view serialized) {
  const std::string_view junction = "@@ ";
  std::string out;
  out.reserve(serialized.size());
  std::size_t pos = 0;
  for (;;) {
    std::size_t hit = serialized.find(junction, pos);
    if (hit == std::string_view::npos) break;
    out.append(serialized.substr(pos, hit - pos));
    pos = hit + junction.size();
  }
  std::string_view rest = serialized.substr(pos);
  if (rest.ends_with(kContinuation) || (pos > 0 && pos == serialized.size())) {
    throw Error("unsegment: dangling continuation at end of sentence");
  }
  out.append(rest);
  return out;
}

std::map<std::string, std::int64_t> vocabulary(const MergeTable& table,
                                               std::span<const std::string> sentences) {
  Segmenter segmenter(table);
  std::map<std::string, std::int64_t> types;
  std::unordered_map<std::string, std::vector<Piece>> cache;
  for (const auto& line : sentences) {
    for (auto word : utf8::split_words(line)) {
      auto it = cache.find(std::string(word));
      if (it == cache.end()) it = cache.emplace(std::string(word), segmenter.segment_word(word)).first;
      for (const auto& p : it->second) {
        types[p.continuation ? p.text + std::string(kContinuation) : p.text] += 1;
      }
    }
  }
  return types;
}

std::vector<std::string> apply_corpus_serial(const Segmenter& segmenter,
                                             std::span<const std::string> lines) {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(segmenter.segment_to_string(line));
  return out;
}

std::vector<std::string> apply_corpus(const Segmenter& segmenter,
                                      std::span<const std::string> lines) {
  std::unordered_map<std::string_view, std::uint32_t> ids;
  std::vector<std::string_view> distinct;
  std::vector<std::vector<std::uint32_t>> line_words(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (auto w : utf8::split_words(lines[i])) {
      auto [it, inserted] = ids.try_emplace(w, static_cast<std::uint32_t>(distinct.size()));
      if (inserted) distinct.push_back(w);
      line_words[i].push_back(it->second);
    }
  }

  std::vector<std::string> segmented(distinct.size());
  const auto n_distinct = static_cast<std::ptrdiff_t>(distinct.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n_distinct; ++i) {
    append_pieces(segmented[i], segmenter.segment_word(distinct[i]));
  }

  std::vector<std::string> out(lines.size());
  const auto n_lines = static_cast<std::ptrdiff_t>(lines.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n_lines; ++i) {
    std::string& dst = out[i];
    for (std::size_t k = 0; k < line_words[i].size(); ++k) {
      if (k > 0) dst.push_back(' ');
      dst += segmented[line_words[i][k]];
    }
  }
  return out;
}

std::vector<std::string> unsegment_corpus(std::span<const std::string> lines) {
  std::vector<std::string> out(lines.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<std::ptrdiff_t>(lines.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = unsegment(lines[i]);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace asymbpe::bpe
