#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace asymbpe::io {

std::vector<std::string> read_lines(std::istream& in);
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_lines(std::ostream& out, const std::vector<std::string>& lines);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::size_t count_lines(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace asymbpe::io
