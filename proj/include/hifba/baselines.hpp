// Comparison methods: normalized subgradient steps with constant (SG-CSS) or
// geometrically decaying (SG-GDSS) step sizes applied directly to phi, and the
// Bregman proximal gradient method for the NMF problem. All of them produce a
// SolverTrace with the same record layout as HiFBA; fields that do not apply
// (envelope, epsilon) stay NaN.
#pragma once

#include "hifba/core.hpp"
#include "hifba/hifbs_nmf.hpp"
#include "hifba/problems/nmf.hpp"
#include "hifba/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hifba {

struct Budget {
  std::size_t max_iterations = 1000;
  double seconds = kInf;
};

enum class BaselineKind { sg_css, sg_gdss, bpg };

struct BaselineConfig {
  BaselineKind kind = BaselineKind::sg_css;
  double alpha = 0.1;   // SG-CSS step
  double beta0 = 0.9;   // SG-GDSS decay
  double gamma = 1.0;   // BPG step
  Budget budget;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(beta0 > 0.0 && beta0 < 1.0)) throw std::invalid_argument("beta0 must lie in (0, 1)");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  }
};

namespace detail {

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// x^{k+1} = x^k - step_k zeta^k / ||zeta^k||, zeta^k = grad f(x^k) + (element of dg(x^k)).
template <typename StepRule>
SolverTrace normalized_subgradient(const CompositeProblem& problem, const Vector& x0, const Budget& budget,
                                   StepRule&& step_rule, const std::string& name, const Observer& observer) {
  require_dim(x0, problem.dim(), name.c_str());
  Stopwatch clock;
  SolverTrace trace;
  trace.solver = name;
  trace.p = problem.p();
  trace.metadata["reporting"] = "best_so_far";
  Vector x = x0;
  for (std::size_t k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.phi = problem.phi(x);
    if (rec.phi < trace.phi_best || trace.x_best.size() == 0) {
      trace.phi_best = rec.phi;
      trace.x_best = x;
    }
    rec.phi_best = trace.phi_best;
    const Vector zeta = problem.f().gradient(x) + problem.g().subgradient(x);
    const double zn = zeta.norm();
    rec.residual_norm = zn;
    if (observer) observer(rec, x);

    std::optional<Status> stop;
    const double step = step_rule(k);
    if (zn == 0.0 || step <= 1e-15 * std::max(1.0, x.norm()))
      stop = Status::converged;
    else if (k >= budget.max_iterations)
      stop = Status::max_outer;
    else if (clock.ms() >= budget.seconds * 1000.0)
      stop = Status::budget;
    if (stop) {
      rec.wall_time_ms = clock.ms();
      trace.records.push_back(rec);
      trace.status = *stop;
      break;
    }
    rec.alpha = step;
    rec.accepted = true;
    x -= (step / zn) * zeta;
    rec.wall_time_ms = clock.ms();
    trace.records.push_back(rec);
  }
  trace.x_final = x;
  return trace;
}

}  // namespace detail

/// Constant normalized step alpha.
inline SolverTrace sg_css(const CompositeProblem& problem, const Vector& x0, double alpha, const Budget& budget,
                          const Observer& observer = {}) {
  if (!(alpha > 0.0)) throw std::invalid_argument("SG-CSS step alpha must be > 0");
  auto trace = detail::normalized_subgradient(
      problem, x0, budget, [alpha](std::size_t) { return alpha; }, "sg_css", observer);
  trace.metadata["alpha"] = std::to_string(alpha);
  return trace;
}

/// Normalized steps beta^{k+1}: beta, beta^2, beta^3, ...
inline SolverTrace sg_gdss_phi(const CompositeProblem& problem, const Vector& x0, double beta0, const Budget& budget,
                               const Observer& observer = {}) {
  if (!(beta0 > 0.0 && beta0 < 1.0)) throw std::invalid_argument("SG-GDSS beta0 must lie in (0, 1)");
  auto trace = detail::normalized_subgradient(
      problem, x0, budget, [beta0](std::size_t k) { return std::pow(beta0, static_cast<double>(k + 1)); }, "sg_gdss",
      observer);
  trace.metadata["beta0"] = std::to_string(beta0);
  return trace;
}

/// Bregman proximal gradient on regularized NMF with the quartic kernel,
/// starting from state.U, state.V. phi is non-increasing for gamma <= 1 (f is
/// 1-smooth relative to h); with `strict` larger steps are rejected and any
/// increase beyond 1e-9 max(1, |phi_k|) raises InvariantViolation.
/// Observers receive the packed (U, V).
inline SolverTrace bpg_nmf(const NmfState& state, double gamma, const Budget& budget, const Observer& observer = {},
                           bool strict = true) {
  state.validate(!strict);
  if (!(gamma > 0.0)) throw std::invalid_argument("BPG gamma must be > 0");
  if (strict && gamma > 1.0) throw std::invalid_argument("BPG gamma must be <= 1 (relative smoothness constant is 1)");
  detail::Stopwatch clock;
  SolverTrace trace;
  trace.solver = "bpg";
  trace.p = 2.0;
  Matrix U = state.U;
  Matrix V = state.V;
  double prev = kInf;
  for (std::size_t k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.phi = nmf_objective(state.X, U, V, state.lambda);
    rec.gamma_k = gamma;
    if (strict && rec.phi > prev + 1e-9 * std::max(1.0, std::abs(prev)))
      throw InvariantViolation("BPG objective increased at k=" + std::to_string(k));
    prev = rec.phi;
    if (rec.phi < trace.phi_best || trace.x_best.size() == 0) {
      trace.phi_best = rec.phi;
      trace.x_best = pack_factors(U, V);
    }
    rec.phi_best = trace.phi_best;
    const NmfFactors next = bpg_nmf_step(state, U, V, gamma);
    rec.residual_norm = std::sqrt((next.U - U).squaredNorm() + (next.V - V).squaredNorm());
    rec.phi_prox = nmf_objective(state.X, next.U, next.V, state.lambda);
    if (observer) observer(rec, pack_factors(U, V));

    std::optional<Status> stop;
    if (rec.residual_norm == 0.0)
      stop = Status::converged;
    else if (k >= budget.max_iterations)
      stop = Status::max_outer;
    else if (clock.ms() >= budget.seconds * 1000.0)
      stop = Status::budget;
    if (stop) {
      rec.wall_time_ms = clock.ms();
      trace.records.push_back(rec);
      trace.status = *stop;
      break;
    }
    rec.alpha = gamma;
    rec.accepted = true;
    U = next.U;
    V = next.V;
    rec.wall_time_ms = clock.ms();
    trace.records.push_back(rec);
  }
  trace.x_final = pack_factors(U, V);
  trace.metadata["gamma"] = std::to_string(gamma);
  return trace;
}

}  // namespace hifba
