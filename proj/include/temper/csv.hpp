#pragma once

#include <cstdlib>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "temper/errors.hpp"
#include "temper/schedules.hpp"

namespace temper {

/// Header plus string cells; no quoting (none of our files need it).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DomainError("csv: missing column '" + name + "'");
  }

  std::vector<double> numeric(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out.push_back(parse(rows[r][c], r + 2));
    return out;
  }

  static double parse(const std::string& cell, std::size_t line) {
    const char* b = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(b, &end);
    if (end == b || *end != '\0') throw DomainError("csv: line " + std::to_string(line) + ": not a number: '" + cell + "'");
    return v;
  }
};

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}
}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DomainError("csv: empty input");
  t.header = detail::split_csv_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size())
      throw DomainError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) + " cells");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

/// Reads a `s,lambda` table; monotonicity is checked by the schedule itself.
inline Schedule schedule_from_csv(std::istream& in) {
  const auto t = read_csv(in);
  if (t.header.size() != 2 || t.header[0] != "s" || t.header[1] != "lambda")
    throw DomainError("schedule csv: header must be 's,lambda'");
  return Schedule::table(t.numeric("s"), t.numeric("lambda"));
}

inline void write_schedule_csv(std::ostream& os, const Schedule& sch, const std::vector<double>& grid) {
  os << "s,lambda\n";
  for (double s : grid) os << fmt17(s) << ',' << fmt17(sch.value(s)) << '\n';
}

}  // namespace temper
