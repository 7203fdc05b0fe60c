#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gridadv {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Parses a whole field as a double; throws ParseError tagged with `line`.
double parse_double(std::string_view field, std::size_t line);
std::size_t parse_size(std::string_view field, std::size_t line);

/// Splits on `sep` without quoting rules; fields are not trimmed.
std::vector<std::string_view> split(std::string_view text, char sep);

std::string_view trim(std::string_view s);

/// Reads a whole file; throws Error if it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace gridadv
