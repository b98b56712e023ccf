#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace asymbpe::utf8 {

// Byte length of the code point starting with `lead`. Invalid lead bytes
// (stray continuation bytes, 0xF8..0xFF) report 1 so they pass through as
// single-byte units.
std::size_t sequence_length(unsigned char lead);

// Splits `text` into code points. A truncated or malformed sequence is split
// into its individual bytes; nothing is dropped, so concatenating the result
// always reproduces `text`.
std::vector<std::string_view> split_chars(std::string_view text);

bool is_space(char c);

// Whitespace-separated tokens; runs of whitespace count as one separator.
std::vector<std::string_view> split_words(std::string_view text);

// Removes every ASCII whitespace byte.
std::string strip_spaces(std::string_view text);

}  // namespace asymbpe::utf8
