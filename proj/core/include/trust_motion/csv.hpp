#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace trust_motion {

/// Minimal RFC 4180 table: a header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

/// Parses a CSV stream with a mandatory header row. Rows whose width differs
/// from the header raise an Error naming the line.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string csv_escape(std::string_view cell);
void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace trust_motion
