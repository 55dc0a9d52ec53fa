#include "trust_motion/csv.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "trust_motion/common.hpp"

namespace trust_motion {

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(fmt::format("missing CSV column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

// Reads one logical record, which may span physical lines inside quotes.
bool read_record(std::istream& in, std::vector<std::string>& cells, std::size_t& line) {
  cells.clear();
  std::string cell;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else if (c == '\n') {
      ++line;
      cells.push_back(std::move(cell));
      return true;
    } else {
      cell.push_back(c);
    }
  }
  if (in_quotes) throw Error(fmt::format("unterminated quoted CSV cell near line {}", line + 1));
  if (!any) return false;
  ++line;
  cells.push_back(std::move(cell));
  return true;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::size_t line = 0;
  std::vector<std::string> cells;
  if (!read_record(in, cells, line)) throw Error("empty CSV input: header row required");
  table.header = cells;
  while (read_record(in, cells, line)) {
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != table.header.size()) {
      throw Error(fmt::format("CSV line {}: expected {} columns, found {}", line,
                              table.header.size(), cells.size()));
    }
    table.rows.push_back(cells);
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}' for reading", path));
  try {
    return read_csv(in);
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path, e.what()));
  }
}

std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (const char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(cells[i]);
  }
  out << '\n';
}

}  // namespace trust_motion
