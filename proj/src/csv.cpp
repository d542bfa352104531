#include "aprl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aprl::csv {

namespace {

void finish_row(Table& t, std::vector<std::string>& row, std::size_t line) {
  if (t.header.empty()) {
    t.header = std::move(row);
    if (t.header.empty()) throw std::runtime_error("csv: empty header row");
  } else {
    if (row.size() != t.header.size()) {
      throw std::runtime_error("csv: row " + std::to_string(line) + " has " +
                               std::to_string(row.size()) + " fields, header has " +
                               std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  row.clear();
}

}  // namespace

Table parse(std::string_view text) {
  Table t;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // true once the current record has any content
  std::size_t line = 1;

  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) throw std::runtime_error("csv: stray quote on line " + std::to_string(line));
        in_quotes = true;
        field_started = true;
        ++i;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        ++i;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') {
          ++i;  // swallow, the \n case closes the record
        } else {
          field += c;  // lone \r is treated as data
          ++i;
        }
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        finish_row(t, row, line);
        field_started = false;
        ++line;
        ++i;
        break;
      default:
        field += c;
        field_started = true;
        ++i;
        break;
    }
  }
  if (in_quotes) throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    finish_row(t, row, line);
  }
  if (t.header.empty()) throw std::runtime_error("csv: empty input");
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string quote_field(const std::string& field) {
  bool needs = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_file(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  auto emit_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << quote_field(row[i]);
    }
    out << '\n';
  };
  emit_row(t.header);
  for (const auto& row : t.rows) emit_row(row);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace aprl::csv
