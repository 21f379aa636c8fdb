// Experiment drivers: the sparse inverse problem sweep over q and the NMF
// comparison. Each (q, solver, seed) or (solver, seed) cell is independent and
// writes its own trace file; summaries are recomputed from those files.
#pragma once

#include "hifba/baselines.hpp"
#include "hifba/harness/config.hpp"
#include "hifba/harness/io.hpp"
#include "hifba/harness/stats.hpp"
#include "hifba/harness/svg.hpp"
#include "hifba/hifbs_nmf.hpp"
#include "hifba/problems/csv.hpp"
#include "hifba/problems/inverse.hpp"
#include "hifba/problems/nmf.hpp"

#include <json.hpp>

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace hifba::harness {

namespace fs = std::filesystem;
using nlohmann::json;

/// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline std::string q_tag(double q) { return format_double(q); }

inline json budget_json(const RunBudget& b) {
  json j = json::object();
  if (b.seconds) j["seconds"] = *b.seconds;
  if (b.iterations) j["iterations"] = *b.iterations;
  return j;
}

inline std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

inline json manifest_base(const std::string& command, const CommonConfig& c) {
  return {{"tool", "hifba"},
          {"version", kVersion},
          {"eigen", eigen_version()},
          {"command", command},
          {"seeds", c.seeds},
          {"budget", budget_json(c.budget)},
          {"jobs", c.jobs}};
}

/// Per-iteration series kept in memory for plotting one seed.
struct PlotSeries {
  std::string label;
  std::vector<double> k, time_ms, a, b;
};

// ---------------------------------------------------------------- inverse

struct InverseCell {
  double q;
  std::string solver;  // hifba | boosted | sg_gdss | sg_css
  double alpha = 0.0;  // SG-CSS step
  std::uint64_t seed;

  std::string label() const { return solver == "sg_css" ? "sg_css_" + format_double(alpha) : solver; }
  std::string file_stem() const { return "inverse_q" + q_tag(q) + "_" + label() + "_seed" + std::to_string(seed); }
};

/// Per-run numbers derived from a trace CSV alone.
struct InverseDigest {
  double snr_best = kNaN;   // SNR at the row with the smallest phi
  double snr_final = kNaN;  // SNR at the last row
  double phi_best = kNaN;
  std::size_t iterations = 0;
};

inline InverseDigest digest_inverse_trace(const TraceTable& t) {
  InverseDigest d;
  if (t.rows.empty()) return d;
  const auto phi = t.column("phi");
  const auto snr = t.column("snr_db");
  const std::size_t best = argmin_finite(phi);
  d.snr_best = snr[best];
  d.snr_final = snr.back();
  d.phi_best = phi[best];
  d.iterations = t.rows.size() - 1;
  return d;
}

inline double inverse_beta0(const InverseConfig& cfg, const std::string& solver, double q) {
  const Beta0Row row = reference_beta0(q);
  if (solver == "hifba") return cfg.beta0_hifba.value_or(row.hifba);
  if (solver == "boosted") return cfg.beta0_boosted.value_or(row.boosted);
  if (solver == "sg_gdss") return cfg.beta0_sg_gdss.value_or(row.sg_gdss);
  return kNaN;
}

/// Runs one cell and returns its trace (records carry SNR and relative error).
inline SolverTrace run_inverse_cell(const InverseConfig& cfg, const InverseCell& cell) {
  auto inst = std::make_shared<const InverseInstance>(
      gen_inverse(cfg.m, cfg.n, cfg.sparsity, cfg.noise, cell.q, cfg.lambda, cell.seed));
  const CompositeProblem problem = make_inverse_problem(inst);
  const Vector x0 = Vector::Zero(cfg.n);
  Observer observer = [&inst](IterationRecord& r, const Vector& x) {
    r.snr_db = snr_db(inst->x_true, x);
    r.rel_err = relative_error(inst->x_true, x);
  };
  const RunBudget& b = cfg.common.budget;
  const double seconds = b.seconds.value_or(b.iterations ? kInf : 2.0);
  const std::size_t iters = b.iterations.value_or(cfg.max_iterations);

  SolverTrace trace;
  if (cell.solver == "hifba" || cell.solver == "boosted") {
    InnerSolverConfig inner_cfg;
    inner_cfg.beta0 = inverse_beta0(cfg, cell.solver, cell.q);
    inner_cfg.max_inner = cfg.max_inner;
    inner_cfg.step_tol = cfg.step_tol;
    inner_cfg.max_restarts = cfg.max_restarts;
    SolverConfig sc;
    sc.gamma = 1.0;
    sc.sigma = 1.0;
    sc.vartheta = cfg.vartheta;
    sc.adaptive_lp = true;
    sc.max_outer = iters;
    sc.time_budget = seconds;
    if (cell.solver == "hifba") {
      sc.structural = Structural::A;
      sc.direction = Direction::none;
    }
    trace = run(problem, make_sggdss_oracle(problem, inner_cfg), x0, sc, observer);
    trace.metadata["beta0"] = format_double(inner_cfg.beta0);
  } else {
    Budget budget{iters, seconds};
    if (cell.solver == "sg_gdss")
      trace = sg_gdss_phi(problem, x0, inverse_beta0(cfg, "sg_gdss", cell.q), budget, observer);
    else
      trace = sg_css(problem, x0, cell.alpha, budget, observer);
  }
  return trace;
}

inline std::vector<InverseCell> inverse_cells(const InverseConfig& cfg) {
  std::vector<InverseCell> cells;
  for (double q : cfg.q_values)
    for (const auto& s : cfg.solvers) {
      if (s == "sg_css") {
        for (double a : cfg.sg_css_alphas)
          for (auto seed : cfg.common.seeds) cells.push_back({q, s, a, seed});
      } else {
        for (auto seed : cfg.common.seeds) cells.push_back({q, s, 0.0, seed});
      }
    }
  return cells;
}

struct InverseReport {
  std::vector<InverseCell> cells;
  std::vector<InverseDigest> digests;
  fs::path summary_path;
};

/// Summary: one row per q, median and IQR of the best-iterate
/// SNR across seeds per solver.
inline std::string inverse_summary_csv(const InverseConfig& cfg, const std::vector<InverseCell>& cells,
                                       const std::vector<InverseDigest>& digests) {
  std::vector<std::string> labels;
  for (const auto& c : cells)
    if (std::find(labels.begin(), labels.end(), c.label()) == labels.end()) labels.push_back(c.label());
  std::ostringstream out;
  out << "p,n_seeds";
  for (const auto& l : labels) {
    if (l == "hifba" || l == "boosted" || l == "sg_gdss") out << ',' << l << "_beta0";
    out << ',' << l << "_snr_db," << l << "_snr_iqr," << l << "_snr_final_db";
  }
  out << '\n';
  for (double q : cfg.q_values) {
    out << format_double(q) << ',' << cfg.common.seeds.size();
    for (const auto& l : labels) {
      std::vector<double> best, final;
      std::string solver;
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].q == q && cells[i].label() == l) {
          best.push_back(digests[i].snr_best);
          final.push_back(digests[i].snr_final);
          solver = cells[i].solver;
        }
      if (l == "hifba" || l == "boosted" || l == "sg_gdss") out << ',' << format_double(inverse_beta0(cfg, solver, q));
      out << ',' << format_double(median(best)) << ',' << format_double(iqr(best)) << ','
          << format_double(median(final));
    }
    out << '\n';
  }
  return out.str();
}

inline InverseReport run_inverse(const InverseConfig& cfg) {
  cfg.validate();
  const fs::path out_dir(cfg.common.out_dir);
  ensure_directory(out_dir / "traces");
  ensure_directory(out_dir / "plots");

  InverseReport report;
  report.cells = inverse_cells(cfg);
  const auto& cells = report.cells;
  const TraceOptions topt{!cfg.common.budget.deterministic(), cfg.snr_squared};
  const std::uint64_t plot_seed = cfg.common.seeds.front();
  std::vector<PlotSeries> plots(cells.size());
  std::vector<std::string> statuses(cells.size());

  parallel_for(cells.size(), cfg.common.jobs, [&](std::size_t i) {
    const InverseCell& cell = cells[i];
    const SolverTrace trace = run_inverse_cell(cfg, cell);
    const fs::path base = out_dir / "traces" / cell.file_stem();
    write_file_atomic(fs::path(base.string() + ".csv"), trace_csv(trace, topt));
    if (!topt.wall_time) write_file_atomic(fs::path(base.string() + ".timing.csv"), timing_csv(trace));
    statuses[i] = to_string(trace.status);
    if (cell.seed == plot_seed) {
      PlotSeries& ps = plots[i];
      ps.label = cell.label();
      for (const auto& r : trace.records) {
        ps.k.push_back(static_cast<double>(r.k));
        ps.time_ms.push_back(r.wall_time_ms);
        ps.a.push_back(r.snr_db);
        ps.b.push_back(r.rel_err);
      }
    }
  });

  report.digests.resize(cells.size());
  std::ostringstream runs;
  runs << "p,solver,seed,snr_best_db,snr_final_db,phi_best,iterations,status\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto t = load_trace_csv(out_dir / "traces" / (cells[i].file_stem() + ".csv"));
    report.digests[i] = digest_inverse_trace(t);
    const auto& d = report.digests[i];
    runs << format_double(cells[i].q) << ',' << cells[i].label() << ',' << cells[i].seed << ','
         << format_double(d.snr_best) << ',' << format_double(d.snr_final) << ',' << format_double(d.phi_best) << ','
         << d.iterations << ',' << statuses[i] << '\n';
  }
  write_file_atomic(out_dir / "runs.csv", runs.str());
  report.summary_path = out_dir / "summary.csv";
  write_file_atomic(report.summary_path, inverse_summary_csv(cfg, cells, report.digests));

  for (double q : cfg.q_values) {
    std::vector<Series> snr_it, err_it, snr_time;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].q == q && cells[i].seed == plot_seed) {
        const PlotSeries& ps = plots[i];
        snr_it.push_back({ps.label, ps.k, ps.a});
        err_it.push_back({ps.label, ps.k, ps.b});
        snr_time.push_back({ps.label, ps.time_ms, ps.a});
      }
    const std::string tag = "q" + q_tag(q) + " seed " + std::to_string(plot_seed);
    write_file_atomic(out_dir / "plots" / ("snr_vs_iteration_q" + q_tag(q) + ".svg"),
                      line_chart_svg({"SNR, " + tag, "iteration", "SNR (dB)"}, snr_it));
    write_file_atomic(out_dir / "plots" / ("relerr_vs_iteration_q" + q_tag(q) + ".svg"),
                      line_chart_svg({"Relative error, " + tag, "iteration", "relative error", true}, err_it));
    write_file_atomic(out_dir / "plots" / ("snr_vs_time_q" + q_tag(q) + ".svg"),
                      line_chart_svg({"SNR, " + tag, "wall time (ms)", "SNR (dB)"}, snr_time));
  }

  json manifest = manifest_base("run-inverse", cfg.common);
  manifest["config"] = {{"m", cfg.m},
                        {"n", cfg.n},
                        {"sparsity", cfg.sparsity},
                        {"noise", cfg.noise},
                        {"lambda", cfg.lambda},
                        {"q", cfg.q_values},
                        {"solvers", cfg.solvers},
                        {"sg_css_alphas", cfg.sg_css_alphas},
                        {"vartheta", cfg.vartheta},
                        {"max_inner", cfg.max_inner},
                        {"step_tol", cfg.step_tol},
                        {"max_restarts", cfg.max_restarts},
                        {"max_iterations", cfg.max_iterations},
                        {"snr_squared", cfg.snr_squared},
                        {"x0", "zeros"},
                        {"adaptive_lp", true}};
  json beta = json::object();
  for (double q : cfg.q_values)
    beta[q_tag(q)] = {{"hifba", inverse_beta0(cfg, "hifba", q)},
                      {"boosted", inverse_beta0(cfg, "boosted", q)},
                      {"sg_gdss", inverse_beta0(cfg, "sg_gdss", q)}};
  manifest["beta0"] = beta;
  manifest["snr_reporting"] = "snr_db: best iterate by phi; snr_final_db: last iterate";
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------- NMF

struct NmfCell {
  std::string solver;  // hifba | boosted | bpg
  std::uint64_t seed;
  std::string file_stem() const { return "nmf_" + solver + "_seed" + std::to_string(seed); }
};

/// Objective of the feasible point produced at each iteration (phi_prox column).
struct NmfDigest {
  double initial = kNaN;
  double final = kNaN;
  double minimum = kNaN;
  std::size_t iterations = 0;
};

inline NmfDigest digest_nmf_trace(const TraceTable& t) {
  NmfDigest d;
  if (t.rows.empty()) return d;
  const auto obj = t.column("phi_prox");
  d.initial = t.column("phi").front();
  d.final = obj.back();
  d.minimum = obj[argmin_finite(obj)];
  d.iterations = t.rows.size() - 1;
  return d;
}

inline NmfState nmf_state_for(const NmfConfig& cfg, std::uint64_t seed) {
  Matrix X = cfg.data_path.empty() ? uniform_matrix(cfg.m, cfg.n, cfg.data_lo, cfg.data_hi, seed)
                                   : load_matrix_csv(cfg.data_path, true);
  NmfState s = make_nmf_state(std::move(X), cfg.rank, cfg.lambda);
  s.validate(cfg.force);
  return s;
}

inline SolverTrace run_nmf_cell(const NmfConfig& cfg, const NmfCell& cell, const NmfState& state_in) {
  auto state = std::make_shared<const NmfState>(state_in);
  const RunBudget& b = cfg.common.budget;
  const double seconds = b.seconds.value_or(kInf);
  const std::size_t iters = b.iterations.value_or(b.seconds ? 1000000 : cfg.default_iterations);
  if (cell.solver == "bpg") return bpg_nmf(*state, cfg.gamma_bpg, Budget{iters, seconds}, {}, !cfg.force);

  const CompositeProblem problem = nmf_reformulate(state);
  SolverConfig sc;
  sc.gamma = cell.solver == "hifba" ? cfg.gamma_hifba : cfg.gamma_boosted;
  sc.sigma = 0.99 / (2.0 * sc.gamma);
  sc.vartheta = cfg.vartheta;
  sc.max_outer = iters;
  sc.time_budget = seconds;
  sc.stop_residual_tol = 0.0;
  if (cell.solver == "hifba") {
    sc.structural = Structural::A;
    sc.direction = Direction::none;
  }
  SolverTrace trace = run(problem, make_nmf_closed_form_oracle(state, problem), pack_factors(state->U, state->V), sc);
  return trace;
}

struct NmfReport {
  std::vector<NmfCell> cells;
  std::vector<NmfDigest> digests;
};

inline NmfReport run_nmf(const NmfConfig& cfg) {
  cfg.validate();
  const fs::path out_dir(cfg.common.out_dir);
  ensure_directory(out_dir / "traces");
  ensure_directory(out_dir / "plots");

  NmfReport report;
  for (auto seed : cfg.common.seeds)
    for (const auto& s : cfg.solvers) report.cells.push_back({s, seed});
  const auto& cells = report.cells;
  std::vector<NmfState> states;
  for (auto seed : cfg.common.seeds) states.push_back(nmf_state_for(cfg, seed));
  auto state_index = [&](std::uint64_t seed) {
    return static_cast<std::size_t>(std::find(cfg.common.seeds.begin(), cfg.common.seeds.end(), seed) -
                                    cfg.common.seeds.begin());
  };

  const TraceOptions topt{!cfg.common.budget.deterministic(), false};
  std::vector<PlotSeries> plots(cells.size());
  std::vector<std::string> statuses(cells.size());
  parallel_for(cells.size(), cfg.common.jobs, [&](std::size_t i) {
    const NmfCell& cell = cells[i];
    const SolverTrace trace = run_nmf_cell(cfg, cell, states[state_index(cell.seed)]);
    const fs::path base = out_dir / "traces" / cell.file_stem();
    write_file_atomic(fs::path(base.string() + ".csv"), trace_csv(trace, topt));
    if (!topt.wall_time) write_file_atomic(fs::path(base.string() + ".timing.csv"), timing_csv(trace));
    statuses[i] = to_string(trace.status);
    PlotSeries& ps = plots[i];
    ps.label = cell.solver;
    for (const auto& r : trace.records) {
      ps.k.push_back(static_cast<double>(r.k));
      ps.time_ms.push_back(r.wall_time_ms);
      ps.a.push_back(r.phi_prox);
    }
  });

  report.digests.resize(cells.size());
  std::ostringstream sum;
  sum << "solver,seed,iterations,objective_initial,objective_final,objective_min,status\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    report.digests[i] = digest_nmf_trace(load_trace_csv(out_dir / "traces" / (cells[i].file_stem() + ".csv")));
    const auto& d = report.digests[i];
    sum << cells[i].solver << ',' << cells[i].seed << ',' << d.iterations << ',' << format_double(d.initial) << ','
        << format_double(d.final) << ',' << format_double(d.minimum) << ',' << statuses[i] << '\n';
  }
  write_file_atomic(out_dir / "summary.csv", sum.str());

  for (auto seed : cfg.common.seeds) {
    std::vector<Series> by_iter, by_time;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].seed == seed) {
        by_iter.push_back({plots[i].label, plots[i].k, plots[i].a});
        by_time.push_back({plots[i].label, plots[i].time_ms, plots[i].a});
      }
    const std::string s = std::to_string(seed);
    write_file_atomic(out_dir / "plots" / ("objective_vs_iteration_seed" + s + ".svg"),
                      line_chart_svg({"NMF objective, seed " + s, "iteration", "objective", true}, by_iter));
    write_file_atomic(out_dir / "plots" / ("objective_vs_time_seed" + s + ".svg"),
                      line_chart_svg({"NMF objective, seed " + s, "wall time (ms)", "objective", true}, by_time));
  }

  json manifest = manifest_base("run-nmf", cfg.common);
  manifest["config"] = {{"data", cfg.data_path.empty() ? json("synthetic_uniform") : json(cfg.data_path)},
                        {"m", states.front().m()},
                        {"n", states.front().n()},
                        {"data_lo", cfg.data_lo},
                        {"data_hi", cfg.data_hi},
                        {"rank", cfg.rank},
                        {"lambda", cfg.lambda},
                        {"kernel_a", states.front().kernel_a},
                        {"gamma_hifba", cfg.gamma_hifba},
                        {"gamma_boosted", cfg.gamma_boosted},
                        {"gamma_bpg", cfg.gamma_bpg},
                        {"vartheta", cfg.vartheta},
                        {"solvers", cfg.solvers},
                        {"force", cfg.force},
                        {"init", "U0 = V0 = 0.1 ones"}};
  manifest["objective_column"] = "phi_prox: objective of the nonnegative point produced at each iteration";
  manifest["omitted_solvers"] = json::array({"cocain"});
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

}  // namespace hifba::harness
