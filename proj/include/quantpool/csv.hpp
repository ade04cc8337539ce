#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace quantpool {

// Minimal CSV machinery for the hub's submission and truth layouts: plain
// comma separation, no quoting (none of the formats we read or write embeds
// commas), one header row.

struct CsvError : std::runtime_error {
  CsvError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what) {}
};

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline double parse_double_field(std::string_view field,
                                 const std::string& path, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw CsvError(path, line,
                   "expected a number, got '" + std::string(field) + "'");
  }
  return value;
}

inline int parse_int_field(std::string_view field, const std::string& path,
                           std::size_t line) {
  int value = 0;
  auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw CsvError(path, line,
                   "expected an integer, got '" + std::string(field) + "'");
  }
  return value;
}

// Shortest decimal text that parses back to exactly the same double, so CSV
// round trips are lossless.
inline std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  // Rows keep the raw line so views into it stay valid.
  std::vector<std::string> lines;  // data lines, in file order
  std::size_t first_data_line = 2; // 1-based line number of lines[0]
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      for (auto f : split_csv_line(line)) table.header.emplace_back(f);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    table.lines.push_back(line);
  }
  if (!have_header) throw std::runtime_error(path + ": empty file, no header");
  return table;
}

// Column lookup by name; unknown extra columns in the file are simply never
// asked for, which keeps us tolerant of format evolution.
inline std::size_t column_index(const CsvTable& table, std::string_view name,
                                const std::string& path) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return i;
  }
  throw std::runtime_error(path + ": missing required column '" +
                           std::string(name) + "'");
}

}  // namespace quantpool
