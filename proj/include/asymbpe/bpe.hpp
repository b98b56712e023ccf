#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace asymbpe::bpe {

// Continuation marker appended to every non-final piece of a word.
inline constexpr std::string_view kContinuation = "@@";

// Suffix that marks word-final symbols in the merge-table file.
inline constexpr std::string_view kWordFinalMarker = "</w>";

inline constexpr std::string_view kTableHeader = "#asym-bpe v1";

struct Symbol {
  std::string text;
  bool word_final = false;

  // Ordering is (text by code point, then non-final before final). Byte-wise
  // comparison of UTF-8 equals code-point order.
  auto operator<=>(const Symbol&) const = default;
};

using SymbolPair = std::pair<Symbol, Symbol>;

struct MergeRule {
  Symbol left;
  Symbol right;
  std::size_t rank = 0;

  bool operator==(const MergeRule&) const = default;
};

struct MergeTable {
  std::vector<MergeRule> rules;
  // FNV-1a of the training corpus, zero when unknown (e.g. loaded from file).
  std::uint64_t source_fingerprint = 0;

  std::size_t nmo() const { return rules.size(); }

  // The first `n` rules. Equal to a table learned with `n` merges on the
  // same corpus.
  MergeTable prefix(std::size_t n) const;
};

// A word split into symbols, weighted by its corpus frequency.
struct SymbolWord {
  std::vector<Symbol> symbols;
  std::int64_t frequency = 0;
};

using WordFrequencies = std::map<std::string, std::int64_t, std::less<>>;
using PairCounts = std::map<SymbolPair, std::int64_t>;

WordFrequencies count_words(std::span<const std::string> sentences);

// Character split of one word; the last character is word-final.
std::vector<Symbol> split_word(std::string_view word);

std::vector<SymbolWord> split_vocabulary(const WordFrequencies& words);

// Frequency-weighted count of every adjacent symbol pair, overlapping
// adjacencies included. Throws on an empty corpus or a malformed word.
PairCounts count_pairs(std::span<const SymbolWord> corpus);

// Whether two symbols may be merged: the concatenation must not contain the
// continuation marker, otherwise segmented output could not be inverted.
bool mergeable(const Symbol& left, const Symbol& right);

// Greedy BPE: `nmo` times, merge the most frequent pair (ties go to the
// smallest (left, right) pair). Stops early when no pair is left.
MergeTable learn_bpe(const WordFrequencies& words, std::size_t nmo);
MergeTable learn_bpe(std::span<const std::string> sentences, std::size_t nmo);

std::uint64_t corpus_fingerprint(std::span<const std::string> sentences);

struct Piece {
  std::string text;
  bool continuation = false;

  bool operator==(const Piece&) const = default;
};

struct SegmentedSentence {
  std::vector<Piece> pieces;

  // "bo@@ su@@ sco" style serialization.
  std::string to_string() const;
  // Original sentence: continuation pieces glued to their successor, words
  // joined by single spaces. Throws on a dangling continuation.
  std::string join() const;

  bool operator==(const SegmentedSentence&) const = default;
};

// Applies a merge table. Immutable after construction and safe to share
// between threads.
class Segmenter {
 public:
  explicit Segmenter(const MergeTable& table);

  // Rules are applied in ascending rank, each one left to right over the
  // whole word. Characters never seen in training stay single pieces.
  std::vector<Piece> segment_word(std::string_view word) const;
  SegmentedSentence segment(std::string_view sentence) const;
  std::string segment_to_string(std::string_view sentence) const;

  std::size_t nmo() const { return nmo_; }

 private:
  static std::string pair_key(const Symbol& left, const Symbol& right);

  std::unordered_map<std::string, std::size_t> ranks_;
  std::size_t nmo_ = 0;
};

SegmentedSentence apply_bpe(const MergeTable& table, std::string_view sentence);

// Inverse of the text serialization: removes every "@@ " junction. Throws if
// the text ends in a dangling continuation.
std::string unsegment(std::string_view serialized);

// Pieces produced over the corpus, keyed by serialized form ("aa@@", "b").
std::map<std::string, std::int64_t> vocabulary(const MergeTable& table,
                                               std::span<const std::string> sentences);

// Corpus kernels. `apply_corpus` segments the distinct words of the corpus in
// parallel and then assembles lines in parallel; `apply_corpus_serial` is the
// line-by-line reference kept for tests and the benchmark.
std::vector<std::string> apply_corpus(const Segmenter& segmenter,
                                      std::span<const std::string> lines);
std::vector<std::string> apply_corpus_serial(const Segmenter& segmenter,
                                             std::span<const std::string> lines);

std::vector<std::string> unsegment_corpus(std::span<const std::string> lines);

// Merge-table file: header line, then "left right" per rule in rank order.
// Word-final symbols end with "</w>"; a literal '\' or '<' in symbol text is
// written with a preceding '\'.
std::string encode_symbol(const Symbol& symbol);
Symbol decode_symbol(std::string_view token);

void write_merge_table(std::ostream& out, const MergeTable& table);
MergeTable read_merge_table(std::istream& in);
void save_merge_table(const std::filesystem::path& path, const MergeTable& table);
MergeTable load_merge_table(const std::filesystem::path& path);

}  // namespace asymbpe::bpe
