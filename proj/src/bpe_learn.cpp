#include <algorithm>
#include <set>
#include <unordered_map>

#include "asymbpe/bpe.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/rng.hpp"
#include "asymbpe/utf8.hpp"

namespace asymbpe::bpe {

MergeTable MergeTable::prefix(std::size_t n) const {
  MergeTable out;
  out.source_fingerprint = source_fingerprint;
  out.rules.assign(rules.begin(), rules.begin() + static_cast<std::ptrdiff_t>(std::min(n, rules.size())));
  return out;
}

WordFrequencies count_words(std::span<const std::string> sentences) {
  WordFrequencies words;
  for (const auto& line : sentences) {
    for (auto w : utf8::split_words(line)) {
      auto it = words.find(w);
      if (it == words.end()) {
        words.emplace(std::string(w), 1);
      } else {
        ++it->second;
      }
    }
  }
  return words;
}

std::vector<Symbol> split_word(std::string_view word) {
  auto chars = utf8::split_chars(word);
  std::vector<Symbol> out;
  out.reserve(chars.size());
  for (auto c : chars) out.push_back(Symbol{std::string(c), false});
  if (!out.empty()) out.back().word_final = true;
  return out;
}

std::vector<SymbolWord> split_vocabulary(const WordFrequencies& words) {
  std::vector<SymbolWord> out;
  out.reserve(words.size());
  for (const auto& [word, freq] : words) {
    if (word.empty()) continue;
    out.push_back(SymbolWord{split_word(word), freq});
  }
  return out;
}

PairCounts count_pairs(std::span<const SymbolWord> corpus) {
  if (corpus.empty()) throw Error("count_pairs: empty corpus");
  PairCounts counts;
  for (const auto& word : corpus) {
    const auto& s = word.symbols;
    if (s.empty()) throw Error("count_pairs: empty word");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].word_final != (i + 1 == s.size())) {
        throw Error("count_pairs: word-final marker must be on the last symbol only");
      }
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      counts[{s[i], s[i + 1]}] += word.frequency;
    }
  }
  return counts;
}

bool mergeable(const Symbol& left, const Symbol& right) {
  const std::string joined = left.text + right.text;
  return joined.find(kContinuation) == std::string::npos;
}

std::uint64_t corpus_fingerprint(std::span<const std::string> sentences) {
  std::uint64_t h = fnv1a({});
  for (const auto& line : sentences) {
    h = fnv1a(line, h);
    h = fnv1a("\n", h);
  }
  return h;
}

namespace {

using PairKey = std::uint64_t;

PairKey make_key(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
std::uint32_t key_left(PairKey k) { return static_cast<std::uint32_t>(k >> 32); }
std::uint32_t key_right(PairKey k) { return static_cast<std::uint32_t>(k & 0xffffffffULL); }

// Incremental learner: pair counts are updated only for words touched by a
// merge, and candidates live in an ordered set so the best pair is O(log n).
class Learner {
 public:
  explicit Learner(const WordFrequencies& words) {
    for (const auto& [word, freq] : words) {
      if (word.empty() || freq <= 0) continue;
      std::vector<std::uint32_t> seq;
      for (auto& sym : split_word(word)) seq.push_back(intern(std::move(sym)));
      words_.push_back(std::move(seq));
      freq_.push_back(freq);
    }
    for (std::uint32_t w = 0; w < words_.size(); ++w) {
      const auto& seq = words_[w];
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        PairKey k = make_key(seq[i], seq[i + 1]);
        counts_[k] += freq_[w];
        where_[k].push_back(w);
      }
    }
    for (const auto& [k, c] : counts_) {
      if (c > 0 && eligible(k)) queue_.insert(Entry{c, key_left(k), key_right(k)});
    }
  }

  bool empty_corpus() const { return words_.empty(); }

  MergeTable run(std::size_t nmo) {
    MergeTable table;
    while (table.rules.size() < nmo && !queue_.empty()) {
      const Entry best = *queue_.begin();
      table.rules.push_back(MergeRule{symbols_[best.left], symbols_[best.right], table.rules.size()});
      merge(best.left, best.right);
    }
    return table;
  }

 private:
  struct Entry {
    std::int64_t count;
    std::uint32_t left;
    std::uint32_t right;
  };

  struct EntryOrder {
    const std::vector<Symbol>* symbols;
    bool operator()(const Entry& x, const Entry& y) const {
      if (x.count != y.count) return x.count > y.count;
      const auto& s = *symbols;
      if (x.left != y.left) {
        auto c = s[x.left] <=> s[y.left];
        if (c != 0) return c < 0;
      }
      if (x.right != y.right) return s[x.right] < s[y.right];
      return false;
    }
  };

  std::uint32_t intern(Symbol sym) {
    std::string key;
    key.reserve(sym.text.size() + 1);
    key.push_back(sym.word_final ? '\1' : '\0');
    key += sym.text;
    auto [it, inserted] = ids_.try_emplace(std::move(key), static_cast<std::uint32_t>(symbols_.size()));
    if (inserted) symbols_.push_back(std::move(sym));
    return it->second;
  }

  bool eligible(PairKey k) {
    auto it = eligible_.find(k);
    if (it != eligible_.end()) return it->second;
    bool ok = mergeable(symbols_[key_left(k)], symbols_[key_right(k)]);
    eligible_.emplace(k, ok);
    return ok;
  }

  void merge(std::uint32_t a, std::uint32_t b) {
    const PairKey merged_key = make_key(a, b);
    const std::uint32_t c = intern(Symbol{symbols_[a].text + symbols_[b].text, symbols_[b].word_final});

    std::vector<std::uint32_t> affected = std::move(where_[merged_key]);
    where_.erase(merged_key);
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()), affected.end());

    std::unordered_map<PairKey, std::int64_t> delta;
    std::vector<std::uint32_t> rewritten;
    for (std::uint32_t w : affected) {
      auto& seq = words_[w];
      const std::int64_t f = freq_[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        if (seq[i] == a && seq[i + 1] == b) {
          present = true;
          break;
        }
      }
      if (!present) continue;

      for (std::size_t i = 0; i + 1 < seq.size(); ++i) delta[make_key(seq[i], seq[i + 1])] -= f;

      rewritten.clear();
      for (std::size_t i = 0; i < seq.size();) {
        if (i + 1 < seq.size() && seq[i] == a && seq[i + 1] == b) {
          rewritten.push_back(c);
          i += 2;
        } else {
          rewritten.push_back(seq[i]);
          ++i;
        }
      }
      seq.assign(rewritten.begin(), rewritten.end());

      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        PairKey k = make_key(seq[i], seq[i + 1]);
        delta[k] += f;
        if (seq[i] == c || seq[i + 1] == c) where_[k].push_back(w);
      }
    }

    for (const auto& [k, d] : delta) {
      if (d == 0) continue;
      auto it = counts_.find(k);
      const std::int64_t old_count = it == counts_.end() ? 0 : it->second;
      const std::int64_t new_count = old_count + d;
      const bool ok = eligible(k);
      if (old_count > 0 && ok) queue_.erase(Entry{old_count, key_left(k), key_right(k)});
      if (new_count > 0) {
        counts_[k] = new_count;
        if (ok) queue_.insert(Entry{new_count, key_left(k), key_right(k)});
      } else if (it != counts_.end()) {
        counts_.erase(it);
      }
    }
  }

  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::vector<std::uint32_t>> words_;
  std::vector<std::int64_t> freq_;
  std::unordered_map<PairKey, std::int64_t> counts_;
  std::unordered_map<PairKey, std::vector<std::uint32_t>> where_;
  std::unordered_map<PairKey, bool> eligible_;
  std::set<Entry, EntryOrder> queue_{EntryOrder{&symbols_}};
};

}  // namespace

MergeTable learn_bpe(const WordFrequencies& words, std::size_t nmo) {
  Learner learner(words);
  if (learner.empty_corpus()) throw Error("learn_bpe: empty corpus");
  MergeTable table = learner.run(nmo);
  std::uint64_t h = fnv1a({});
  for (const auto& [word, freq] : words) {
    h = fnv1a(word, h);
    h = fnv1a(std::to_string(freq), h);
  }
  table.source_fingerprint = h;
  return table;
}

MergeTable learn_bpe(std::span<const std::string> sentences, std::size_t nmo) {
  MergeTable table = learn_bpe(count_words(sentences), nmo);
  table.source_fingerprint = corpus_fingerprint(sentences);
  return table;
}

}  // namespace asymbpe::bpe
