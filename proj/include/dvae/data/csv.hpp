#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dvae::data {

/// Comma-separated table without quoting. Line numbers are 1-based
/// physical lines (the header is line 1).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

/// Rejects ragged rows, citing the offending line. Blank lines are skipped.
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split_fields(std::string_view line, char sep = ',');

/// Parses a finite double; throws InvalidArgument citing line and column.
double parse_real(const std::string& cell, std::size_t line, const std::string& column);

}  // namespace dvae::data
