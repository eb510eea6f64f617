#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace codemap {

// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes `content` to `path` atomically enough for our purposes (truncate +
// write); creates parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view text, char sep);
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split_ws(std::string_view text);
std::string_view trim(std::string_view text);

// Shortest round-tripping text for a double, at most `digits` significant digits.
std::string format_real(double value, int digits = 9);
double parse_real(std::string_view text);

// Provenance block: `## ...` lines prepended to artifacts. Readers strip them.
std::string provenance_block(std::string_view provenance);
// Returns the line index of the first line that is not a provenance line.
std::size_t skip_provenance(const std::vector<std::string>& lines);

}  // namespace codemap
