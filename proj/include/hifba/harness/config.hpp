// Experiment configurations driven by the CLI and INI files.
#pragma once

#include "hifba/core.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hifba::harness {

inline constexpr const char* kVersion = "0.1.0";

struct RunBudget {
  std::optional<double> seconds;
  std::optional<std::size_t> iterations;

  /// Deterministic runs (iteration budget) write wall_time_ms = 0 into traces.
  bool deterministic() const { return iterations.has_value() && !seconds.has_value(); }

  void validate() const {
    if (seconds && iterations) throw std::invalid_argument("--budget-secs and --budget-iters are mutually exclusive");
    if (seconds && !(*seconds > 0.0)) throw std::invalid_argument("budget seconds must be > 0");
    if (iterations && *iterations == 0) throw std::invalid_argument("budget iterations must be >= 1");
  }
};

struct CommonConfig {
  std::string out_dir = "out";
  std::vector<std::uint64_t> seeds{1};
  RunBudget budget;
  std::size_t jobs = 1;
};

/// Default beta0 per q: {HiFBA, Boosted HiFBA, SG-GDSS}.
struct Beta0Row {
  double hifba, boosted, sg_gdss;
};

inline Beta0Row reference_beta0(double q) {
  static const std::map<double, Beta0Row> table{
      {1.1, {0.97, 0.86, 0.97}}, {1.5, {0.80, 0.76, 0.80}}, {1.75, {0.94, 0.86, 0.94}}, {2.0, {0.99, 0.75, 0.99}}};
  for (const auto& [key, row] : table)
    if (std::abs(key - q) < 1e-12) return row;
  return {0.9, 0.9, 0.9};
}

struct InverseConfig {
  CommonConfig common;
  Index m = 100;
  Index n = 200;
  double sparsity = 0.1;
  double noise = 0.1;
  double lambda = 1.0;
  std::vector<double> q_values{1.1, 1.5, 1.75, 2.0};
  std::vector<std::string> solvers{"hifba", "boosted", "sg_gdss", "sg_css"};
  std::vector<double> sg_css_alphas{0.01, 0.1, 1.0};
  std::optional<double> beta0_hifba, beta0_boosted, beta0_sg_gdss;
  double vartheta = 0.72;
  std::size_t max_inner = 25;
  double step_tol = 1e-3;
  std::size_t max_restarts = 10;
  std::size_t max_iterations = 20000;  // cap used with a seconds budget
  bool snr_squared = false;

  void validate() const {
    common.budget.validate();
    if (m <= 0 || n <= 0) throw std::invalid_argument("m and n must be positive");
    if (q_values.empty()) throw std::invalid_argument("at least one q value is required");
    if (solvers.empty()) throw std::invalid_argument("at least one solver must be selected");
    if (common.seeds.empty()) throw std::invalid_argument("at least one seed is required");
    for (const auto& s : solvers)
      if (s != "hifba" && s != "boosted" && s != "sg_gdss" && s != "sg_css")
        throw std::invalid_argument("unknown inverse solver '" + s + "'");
    for (double q : q_values)
      if (!(q > 1.0 && q <= 2.0)) throw std::invalid_argument("q must lie in (1, 2], got " + std::to_string(q));
    for (double a : sg_css_alphas)
      if (!(a > 0.0)) throw std::invalid_argument("SG-CSS alphas must be > 0");
  }
};

struct NmfConfig {
  CommonConfig common;
  std::string data_path;  // empty: synthetic uniform data
  Index m = 50;
  Index n = 50;
  double data_lo = 0.0;
  double data_hi = 0.1;
  Index rank = 5;
  double lambda = 0.1;
  double gamma_hifba = 300.0;
  double gamma_boosted = 300.0;
  double gamma_bpg = 1.0;
  double vartheta = 0.95;
  std::vector<std::string> solvers{"hifba", "boosted", "bpg"};
  bool force = false;
  std::size_t default_iterations = 1000;

  void validate() const {
    common.budget.validate();
    if (rank <= 0) throw std::invalid_argument("rank must be positive");
    if (solvers.empty()) throw std::invalid_argument("at least one solver must be selected");
    if (common.seeds.empty()) throw std::invalid_argument("at least one seed is required");
    for (const auto& s : solvers)
      if (s != "hifba" && s != "boosted" && s != "bpg") throw std::invalid_argument("unknown NMF solver '" + s + "'");
    if (data_path.empty() && (m <= 0 || n <= 0)) throw std::invalid_argument("m and n must be positive");
    if (!(data_lo >= 0.0 && data_hi > data_lo)) throw std::invalid_argument("need 0 <= data_lo < data_hi");
  }
};

struct ValidateConfig {
  CommonConfig common;
  std::size_t samples = 2000;
};

}  // namespace hifba::harness
