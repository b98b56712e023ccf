#pragma once

// Brute-force BPE used as a test oracle. It shares no code with the library:
// every step recounts all pairs from scratch and rewrites every word.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Sym {
  std::string text;
  bool final = false;

  bool operator<(const Sym& o) const {
    if (text != o.text) return text < o.text;
    return final < o.final;
  }
  bool operator==(const Sym& o) const { return text == o.text && final == o.final; }
};

struct Rule {
  Sym left, right;
};

inline std::vector<Sym> chars_of(const std::string& word) {
  std::vector<Sym> out;
  for (std::size_t i = 0; i < word.size();) {
    const unsigned char c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    if (i + len > word.size()) len = 1;
    out.push_back(Sym{word.substr(i, len), false});
    i += len;
  }
  if (!out.empty()) out.back().final = true;
  return out;
}

// A pair whose concatenation contains "@@" would make the serialized output
// ambiguous, so it is never merged.
inline bool allowed(const Sym& l, const Sym& r) { return (l.text + r.text).find("@@") == std::string::npos; }

inline std::vector<Sym> merge_word(const std::vector<Sym>& w, const Rule& rule) {
  std::vector<Sym> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i + 1 < w.size() && w[i] == rule.left && w[i + 1] == rule.right) {
      out.push_back(Sym{w[i].text + w[i + 1].text, w[i + 1].final});
      ++i;
    } else {
      out.push_back(w[i]);
    }
  }
  return out;
}

inline std::vector<Rule> learn(const std::map<std::string, std::int64_t>& words, std::size_t nmo) {
  std::vector<std::pair<std::vector<Sym>, std::int64_t>> vocab;
  for (const auto& [w, f] : words) vocab.emplace_back(chars_of(w), f);
  std::vector<Rule> rules;
  while (rules.size() < nmo) {
    std::map<std::pair<Sym, Sym>, std::int64_t> counts;
    for (const auto& [w, f] : vocab) {
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        if (allowed(w[i], w[i + 1])) counts[{w[i], w[i + 1]}] += f;
      }
    }
    const std::pair<Sym, Sym>* best = nullptr;
    std::int64_t best_count = 0;
    for (const auto& [p, c] : counts) {  // map order = smallest pair first
      if (c > best_count) {
        best = &p;
        best_count = c;
      }
    }
    if (!best) break;
    const Rule rule{best->first, best->second};
    rules.push_back(rule);
    for (auto& [w, f] : vocab) w = merge_word(w, rule);
  }
  return rules;
}

// Rank-order passes: every rule once, left to right.
inline std::vector<std::string> segment_word(const std::vector<Rule>& rules, const std::string& word) {
  auto w = chars_of(word);
  for (const auto& r : rules) w = merge_word(w, r);
  std::vector<std::string> out;
  for (const auto& s : w) out.push_back(s.final ? s.text : s.text + "@@");
  return out;
}

inline std::string segment_line(const std::vector<Rule>& rules, const std::string& line) {
  std::string out;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    for (const auto& piece : segment_word(rules, word)) {
      if (!out.empty()) out += ' ';
      out += piece;
    }
    word.clear();
  };
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace oracle
