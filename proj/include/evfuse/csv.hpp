#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace evfuse::csv {

using Row = std::vector<std::string>;

/// Reads a comma-separated file. Double-quoted fields may contain commas and
/// doubled quotes; CR before LF is dropped; blank lines are skipped.
std::vector<Row> read_file(const std::filesystem::path& path);

std::vector<Row> parse(std::string_view text);

/// Strict finite real. Throws kParse naming `where` on failure.
double parse_real(std::string_view cell, const std::string& where);

/// Non-negative integer. Throws kParse naming `where` on failure.
long long parse_integer(std::string_view cell, const std::string& where);

}  // namespace evfuse::csv
