#pragma once

#include <string>
#include <vector>

namespace artrd {

// Plain comma-separated tables: no quoting, cells must not contain commas or
// newlines. Numbers are written with enough digits to round-trip doubles.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string csv_cell(double v);
std::string csv_cell(long long v);

std::string csv_format(const CsvTable& table);
CsvTable csv_parse(const std::string& text);

double csv_number(const std::string& cell);

/// Column index by header name; throws if absent.
std::size_t csv_column(const CsvTable& table, const std::string& name);

}  // namespace artrd
