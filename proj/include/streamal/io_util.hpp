#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace streamal {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// RFC-style CSV: quoted fields may contain commas, doubled quotes, and
// newlines. Empty trailing line is ignored.
std::vector<CsvRecord> parse_csv(std::string_view content);

std::string csv_escape(std::string_view field);

std::string read_file(const std::string& path);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double value);

}  // namespace streamal
