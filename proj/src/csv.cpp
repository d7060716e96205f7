#include "artrd/csv.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "artrd/common.hpp"

namespace artrd {

std::string csv_cell(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string csv_cell(long long v) { return std::to_string(v); }

std::string csv_format(const CsvTable& table) {
  std::ostringstream out;
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  emit_row(table.header);
  for (const auto& row : table.rows) emit_row(row);
  return out.str();
}

CsvTable csv_parse(const std::string& text) {
  CsvTable table;
  std::vector<std::string> row;
  std::string cell;
  bool first_row = true;
  auto flush_row = [&] {
    row.push_back(cell);
    cell.clear();
    if (first_row) {
      table.header = row;
      first_row = false;
    } else {
      if (row.size() != table.header.size()) throw Error("ragged csv row");
      table.rows.push_back(row);
    }
    row.clear();
  };
  for (char c : text) {
    if (c == ',') {
      row.push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      flush_row();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (!cell.empty() || !row.empty()) flush_row();
  return table;
}

double csv_number(const std::string& cell) {
  double v = 0.0;
  const auto* begin = cell.data();
  const auto* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw Error("not a number in csv: '" + cell + "'");
  return v;
}

std::size_t csv_column(const CsvTable& table, const std::string& name) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return i;
  throw Error("csv column not found: " + name);
}

}  // namespace artrd
