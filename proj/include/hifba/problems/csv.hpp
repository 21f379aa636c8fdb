// Dense matrix CSV: one row per line, comma separated, no header.
#pragma once

#include "hifba/core.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hifba {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_cell(std::string_view cell, std::size_t line, std::size_t col) {
  cell = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw CsvError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": not a number: '" +
                   std::string(cell) + "'");
  return v;
}

}  // namespace detail

inline Matrix parse_matrix_csv(std::istream& in, bool require_nonnegative = false) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    std::size_t col = 1;
    while (true) {
      const auto comma = rest.find(',');
      const double v = detail::parse_cell(rest.substr(0, comma), line_no, col);
      if (std::isnan(v)) throw CsvError("line " + std::to_string(line_no) + ": NaN entry");
      if (require_nonnegative && v < 0.0) throw CsvError("line " + std::to_string(line_no) + ": negative entry");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
      ++col;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw CsvError("line " + std::to_string(line_no) + ": ragged row (" + std::to_string(row.size()) + " cells, expected " +
                     std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("empty matrix file");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

inline Matrix load_matrix_csv(const std::string& path, bool require_nonnegative = false) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return parse_matrix_csv(in, require_nonnegative);
}

/// Shortest round-trip formatting, so reading back is exact.
inline void write_matrix_csv(std::ostream& out, const Matrix& M) {
  char buf[32];
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), M(i, j));
      (void)ec;
      if (j) out << ',';
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

inline void save_matrix_csv(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write " + path);
  write_matrix_csv(out, M);
}

}  // namespace hifba
