#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "fpnsd/common.hpp"

namespace fpnsd::csv {

// Shortest round-trip representation; keeps output byte-stable across runs.
std::string format_double(double value);

std::vector<std::string> split_line(std::string_view line);

double parse_double(std::string_view field, const std::string& context);
long parse_long(std::string_view field, const std::string& context);

// Reads a whole text file, normalising CRLF line endings; throws data_error.
std::vector<std::string> read_lines(const std::string& path);

void write_file(const std::string& path, const std::string& content);

}  // namespace fpnsd::csv
