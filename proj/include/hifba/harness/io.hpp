// Trace CSV persistence and atomic file output.
#pragma once

#include "hifba/solver.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace hifba::harness {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal; inf, -inf and nan spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("not a number: '" + s + "'");
  return v;
}

/// Writes to a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory is not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

struct TraceOptions {
  bool wall_time = true;       // false: wall_time_ms written as 0
  bool snr_squared = false;    // adds snr_db_squared (20 log10 form)
};

inline const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> cols{
      "k",        "phi",       "envelope_inexact", "residual_norm", "alpha", "backtracks",  "epsilon_k",
      "wall_time_ms", "phi_best", "phi_prox",     "gamma",         "sigma", "inner_iters", "fallback",
      "snr_db",   "rel_err"};
  return cols;
}

inline std::string trace_csv(const SolverTrace& trace, const TraceOptions& opt = {}) {
  std::ostringstream out;
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  if (opt.snr_squared) out << ",snr_db_squared";
  out << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.phi) << ',' << format_double(r.envelope_inexact) << ','
        << format_double(r.residual_norm) << ',' << format_double(r.alpha) << ',' << r.backtracks << ','
        << format_double(r.epsilon_k) << ',' << format_double(opt.wall_time ? r.wall_time_ms : 0.0) << ','
        << format_double(r.phi_best) << ',' << format_double(r.phi_prox) << ',' << format_double(r.gamma_k) << ','
        << format_double(r.sigma_k) << ',' << r.inner_iterations << ',' << (r.fallback ? 1 : 0) << ','
        << format_double(r.snr_db) << ',' << format_double(r.rel_err);
    if (opt.snr_squared) out << ',' << format_double(2.0 * r.snr_db);
    out << '\n';
  }
  return out.str();
}

inline std::string timing_csv(const SolverTrace& trace) {
  std::ostringstream out;
  out << "k,wall_time_ms\n";
  for (const auto& r : trace.records) out << r.k << ',' << format_double(r.wall_time_ms) << '\n';
  return out.str();
}

/// A trace CSV read back as named numeric columns.
struct TraceTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw IoError("trace has no column '" + name + "'");
  }

  std::vector<double> column(const std::string& name) const {
    const std::size_t i = index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }
};

inline TraceTable parse_trace_csv(std::istream& in) {
  TraceTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty trace file");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(parse_double(cell));
    if (row.size() != t.header.size()) throw IoError("trace row has " + std::to_string(row.size()) + " cells");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline TraceTable load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_trace_csv(in);
}

}  // namespace hifba::harness
