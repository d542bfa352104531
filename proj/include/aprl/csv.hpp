#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace aprl::csv {

// Raw string table; every row has exactly header.size() cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 parsing: comma separators, LF or CRLF records, double-quoted
// fields may contain commas, newlines and doubled quotes. Throws
// std::runtime_error on malformed quoting or ragged rows.
Table parse(std::string_view text);
Table read_file(const std::string& path);

// Quotes a field only when it needs it.
std::string quote_field(const std::string& field);
void write_file(const std::string& path, const Table& t);

// Round-trip-exact decimal form (%.17g); the canonical way the library
// prints doubles into CSV cells, policy files and fitted transform tables.
std::string format_double(double v);

}  // namespace aprl::csv
