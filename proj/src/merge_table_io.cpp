#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "asymbpe/bpe.hpp"
#include "asymbpe/error.hpp"
#include "asymbpe/text_io.hpp"

namespace asymbpe::bpe {

std::string encode_symbol(const Symbol& symbol) {
  std::string out;
  out.reserve(symbol.text.size() + kWordFinalMarker.size());
  for (char c : symbol.text) {
    if (c == '\\' || c == '<') out.push_back('\\');
    out.push_back(c);
  }
  if (symbol.word_final) out += kWordFinalMarker;
  return out;
}

Symbol decode_symbol(std::string_view token) {
  Symbol sym;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const char c = token[i];
    if (c == '\\') {
      if (i + 1 == token.size()) throw Error("merge table: trailing escape in '" + std::string(token) + "'");
      sym.text.push_back(token[++i]);
    } else if (c == '<') {
      if (token.substr(i) != kWordFinalMarker) {
        throw Error("merge table: unescaped '<' in '" + std::string(token) + "'");
      }
      sym.word_final = true;
      break;
    } else {
      sym.text.push_back(c);
    }
  }
  if (sym.text.empty()) throw Error("merge table: empty symbol in '" + std::string(token) + "'");
  return sym;
}

void write_merge_table(std::ostream& out, const MergeTable& table) {
  out << kTableHeader << '\n';
  for (const auto& rule : table.rules) {
    out << encode_symbol(rule.left) << ' ' << encode_symbol(rule.right) << '\n';
  }
}

MergeTable read_merge_table(std::istream& in) {
  auto lines = io::read_lines(in);
  if (lines.empty() || lines.front() != kTableHeader) {
    throw Error("merge table: missing '" + std::string(kTableHeader) + "' header");
  }
  MergeTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos) {
      throw Error("merge table: line " + std::to_string(i + 1) + " is not 'left right'");
    }
    MergeRule rule{decode_symbol(std::string_view(line).substr(0, space)),
                   decode_symbol(std::string_view(line).substr(space + 1)), table.rules.size()};
    if (rule.left.word_final) {
      throw Error("merge table: line " + std::to_string(i + 1) + " has a word-final left symbol");
    }
    if (!mergeable(rule.left, rule.right)) {
      throw Error("merge table: line " + std::to_string(i + 1) + " would create the continuation marker");
    }
    table.rules.push_back(std::move(rule));
  }
  return table;
}

void save_merge_table(const std::filesystem::path& path, const MergeTable& table) {
  std::ostringstream out;
  write_merge_table(out, table);
  io::write_file_atomic(path, out.str());
}

MergeTable load_merge_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open merge table: " + path.string());
  return read_merge_table(in);
}

}  // namespace asymbpe::bpe
