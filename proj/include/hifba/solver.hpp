// HiFBA and Boosted HiFBA outer loops.
//
// Each outer iteration computes an inexact forward-backward point y_bar of the
// current iterate x^k together with the inexact envelope F_k and residual
// R_k = x^k - y_bar. Boosted HiFBA then backtracks alpha = vartheta^m along
//   x_hat = (1 - alpha) y_bar + alpha (x^k + d),   d = -omega R_k,
// until the envelope at x_hat, computed with the next accuracy eps_{k+1},
// satisfies
//   F_{k+1}(x_hat) <= F_k - sigma ||R_k||^p + eps_k + eps_{k+1}.
// Plain HiFBA takes x^{k+1} = y_bar.
//
// Three invariants are monitored at runtime: the acceptance inequality above,
// the Lyapunov sequence v_k = F_k + sum_{j>=k} eps_j + sum_{j>=k+1} eps_j, and
// the residual summability bound sum ||R_k||^p <= (F_0 - inf phi + 2 sum eps)/sigma.
#pragma once

#include "hifba/core.hpp"
#include "hifba/hifbs.hpp"
#include "hifba/majorant.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hifba {

/// Summable, positive, non-increasing accuracy sequence eps_k.
class EpsilonSchedule {
 public:
  /// scale / (k + 1)^2.
  static EpsilonSchedule inverse_square(double scale = 1.0) {
    if (!(scale > 0.0)) throw std::invalid_argument("epsilon scale must be > 0");
    return EpsilonSchedule(Kind::inverse_square, scale, 0.0);
  }
  /// first * ratio^k, ratio in (0, 1).
  static EpsilonSchedule geometric(double first, double ratio) {
    if (!(first > 0.0) || !(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("invalid geometric schedule");
    return EpsilonSchedule(Kind::geometric, first, ratio);
  }

  double operator()(std::size_t k) const {
    const double kk = static_cast<double>(k);
    if (kind_ == Kind::inverse_square) return a_ / ((kk + 1.0) * (kk + 1.0));
    return a_ * std::pow(b_, kk);
  }

  double total() const {
    if (kind_ == Kind::inverse_square) return a_ * std::numbers::pi * std::numbers::pi / 6.0;
    return a_ / (1.0 - b_);
  }

  std::string describe() const {
    if (kind_ == Kind::inverse_square) return "inverse_square(" + std::to_string(a_) + ")";
    return "geometric(" + std::to_string(a_) + "," + std::to_string(b_) + ")";
  }

 private:
  enum class Kind { inverse_square, geometric };
  EpsilonSchedule(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

enum class Direction { none, spectral };
enum class Structural { A, C };

struct SolverConfig {
  double gamma = 1.0;
  double sigma = 1.0;
  double vartheta = 0.72;
  EpsilonSchedule epsilon = EpsilonSchedule::inverse_square();
  std::size_t max_outer = 1000;
  std::size_t max_backtracks = 60;
  Direction direction = Direction::spectral;
  Structural structural = Structural::C;
  bool adaptive_lp = false;
  double stop_residual_tol = 1e-6;
  double time_budget = kInf;  // seconds, checked between outer iterations
  bool strict_monitors = true;

  bool plain() const { return structural == Structural::A; }

  /// With a fixed step the initialization conditions gamma < 1/L_p and
  /// sigma < (1 - gamma L_p) / (p gamma) are enforced; when L_p is unknown
  /// (e.g. concave f, where any L_p > 0 works) the L_p -> 0 limit is used.
  void validate(const CompositeProblem& problem) const {
    if (!(vartheta > 0.0 && vartheta < 1.0)) throw std::invalid_argument("vartheta must lie in (0, 1)");
    if (!(gamma > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("gamma and sigma must be > 0");
    if (!(stop_residual_tol >= 0.0)) throw std::invalid_argument("stop_residual_tol must be >= 0");
    if (adaptive_lp) return;
    const double lp = problem.lp_estimate().value_or(0.0);
    const double p = problem.p();
    if (!(gamma * lp < 1.0))
      throw std::invalid_argument("gamma must lie in (0, 1/L_p): gamma=" + std::to_string(gamma) +
                                  ", L_p=" + std::to_string(lp));
    if (!(sigma < (1.0 - gamma * lp) / (p * gamma)))
      throw std::invalid_argument("sigma must lie in (0, (1 - gamma L_p)/(p gamma))");
  }
};

struct SpectralState {
  double omega_prev = 1.0;
  double omega_min = 1e-1;
  double omega_max = 1e10;
  Vector s_prev;
  Vector r_prev;
};

struct SpectralResult {
  double omega = 1.0;
  Vector d;
};

/// omega from the safeguarded Barzilai-Borwein quotient <s,s>/<s,y> with
/// s = x_cur - x_prev, y = r_cur - r_prev; out-of-range quotients fall back
/// to 1, 1e5 or 1/||r_cur|| depending on ||r_cur||. d = -omega r_cur.
inline SpectralResult spectral_direction(SpectralState& state, const Vector& x_cur, const Vector& x_prev,
                                         const Vector& r_cur, const Vector& r_prev) {
  const Vector s = x_cur - x_prev;
  const Vector y = r_cur - r_prev;
  const double sy = s.dot(y);
  const double quotient = sy != 0.0 ? std::abs(s.squaredNorm() / sy) : kNaN;
  double omega = 0.0;
  if (std::isfinite(quotient) && quotient >= state.omega_min && quotient <= state.omega_max) {
    omega = quotient;
  } else {
    const double rn = r_cur.norm();
    if (rn > 1.0)
      omega = 1.0;
    else if (rn < 1e-5)
      omega = 1e5;
    else
      omega = 1.0 / rn;
  }
  state.omega_prev = omega;
  state.s_prev = s;
  state.r_prev = r_prev;
  return {omega, -omega * r_cur};
}

/// First iteration: no history, omega = 1.
inline SpectralResult spectral_direction(SpectralState& state, const Vector& r_cur) {
  state.omega_prev = 1.0;
  return {1.0, -r_cur};
}

/// Kind A: y_bar. Kind C: (1 - alpha) y_bar + alpha (x + d).
inline Vector structural_iterate(Structural kind, double alpha, const Vector& x, const Vector& y_bar, const Vector& d) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (kind == Structural::A) return y_bar;
  return (1.0 - alpha) * y_bar + alpha * (x + d);
}

enum class Status { converged, budget, max_outer };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::budget: return "budget";
    case Status::max_outer: return "max_outer";
  }
  return "unknown";
}

struct IterationRecord {
  std::size_t k = 0;
  double phi = kNaN;               // phi(x^k)
  double phi_prox = kNaN;          // phi(y_bar^k)
  double phi_best = kNaN;          // min_{j<=k} phi(x^j)
  double envelope_inexact = kNaN;  // F_k
  double residual_norm = kNaN;     // ||R_k||
  double alpha = 0.0;              // step that produced x^{k+1}; 0 on the terminal record
  std::size_t backtracks = 0;
  double epsilon_k = kNaN;
  double gamma_k = kNaN;
  double sigma_k = kNaN;
  double envelope_next = kNaN;   // envelope of the chosen candidate x^{k+1}
  double acceptance_rhs = kNaN;  // F_k - sigma ||R_k||^p + eps_k + eps_{k+1}
  bool accepted = false;         // acceptance inequality held for the chosen candidate
  bool fallback = false;         // backtracking exhausted, plain update taken
  std::size_t inner_iterations = 0;
  double wall_time_ms = 0.0;
  double snr_db = kNaN;   // filled by observers
  double rel_err = kNaN;  // filled by observers
  bool terminal() const { return alpha == 0.0; }
};

struct MonitorReport {
  double acceptance_max_violation = -kInf;
  double lyapunov_max_violation = -kInf;
  double summability_max_violation = -kInf;
  std::size_t accepted_steps = 0;
  std::size_t fallback_steps = 0;
  std::size_t summability_checks = 0;
};

struct SolverTrace {
  std::string solver;
  double p = 2.0;
  std::vector<IterationRecord> records;
  Status status = Status::max_outer;
  Vector x_final;
  Vector x_best;
  double phi_best = kInf;
  MonitorReport monitors;
  std::map<std::string, std::string> metadata;
};

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a run cannot continue; carries the trace recorded so far.
class SolverAbort : public std::runtime_error {
 public:
  SolverAbort(const std::string& what, SolverTrace partial) : std::runtime_error(what), trace(std::move(partial)) {}
  SolverTrace trace;
};

/// Called once per record with the iterate it describes; may fill snr_db / rel_err.
using Observer = std::function<void(IterationRecord&, const Vector& x)>;

inline constexpr double kMonitorTol = 1e-10;

/// Incremental checker for the three runtime invariants. Records are fed in
/// order; record i is settled when record i+1 arrives (or on finish()).
/// Lyapunov and summability are evaluated on stretches of accepted steps with
/// unchanged (gamma, sigma). Summability needs a lower bound on inf phi and is
/// only enabled for fixed-step runs. Violations are relative to max(1, |bound|).
class InvariantMonitor {
 public:
  InvariantMonitor(double p, double eps_total, std::optional<double> lower_bound, bool check_summability)
      : p_(p), eps_total_(eps_total), lower_bound_(lower_bound), check_summability_(check_summability) {}

  void feed(const IterationRecord& rec) {
    if (pending_) settle(*pending_, &rec);
    pending_ = rec;
  }

  void finish() {
    if (pending_) settle(*pending_, nullptr);
    pending_.reset();
  }

  const MonitorReport& report() const { return report_; }

 private:
  static double scaled(double excess, double bound) { return excess / std::max(1.0, std::abs(bound)); }

  void settle(const IterationRecord& r, const IterationRecord* next) {
    if (r.terminal()) return;
    if (r.fallback) ++report_.fallback_steps;
    if (!r.accepted) {
      segment_.reset();
      return;
    }
    ++report_.accepted_steps;
    report_.acceptance_max_violation =
        std::max(report_.acceptance_max_violation, scaled(r.envelope_next - r.acceptance_rhs, r.acceptance_rhs));

    if (!segment_ || segment_->gamma != r.gamma_k || segment_->sigma != r.sigma_k)
      segment_ = Segment{r.envelope_inexact, r.gamma_k, r.sigma_k, 0.0};
    if (check_summability_ && lower_bound_) {
      segment_->residual_sum += std::pow(r.residual_norm, p_);
      const double bound = (segment_->envelope_start - *lower_bound_ + 2.0 * eps_total_) / segment_->sigma;
      report_.summability_max_violation =
          std::max(report_.summability_max_violation, scaled(segment_->residual_sum - bound, bound));
      ++report_.summability_checks;
    }
    if (next && next->gamma_k == r.gamma_k) {
      const double bound = r.envelope_inexact + r.epsilon_k + next->epsilon_k;
      report_.lyapunov_max_violation =
          std::max(report_.lyapunov_max_violation, scaled(next->envelope_inexact - bound, bound));
    }
  }

  struct Segment {
    double envelope_start;
    double gamma;
    double sigma;
    double residual_sum;
  };

  double p_;
  double eps_total_;
  std::optional<double> lower_bound_;
  bool check_summability_;
  std::optional<IterationRecord> pending_;
  std::optional<Segment> segment_;
  MonitorReport report_;
};

inline bool monitors_ok(const MonitorReport& m) {
  return m.acceptance_max_violation <= kMonitorTol && m.lyapunov_max_violation <= kMonitorTol &&
         m.summability_max_violation <= kMonitorTol;
}

/// Offline re-check of a finished trace.
inline MonitorReport verify_trace(const SolverTrace& trace, const EpsilonSchedule& eps,
                                  std::optional<double> lower_bound, bool check_summability = true) {
  InvariantMonitor monitor(trace.p, eps.total(), lower_bound, check_summability);
  for (const auto& r : trace.records) monitor.feed(r);
  monitor.finish();
  return monitor.report();
}

/// Everything an outer iteration needs to know about the current iterate.
struct IterateState {
  std::size_t k = 0;
  Vector x;
  HifbsSolution solution;  // at x with gamma and eps_k
  double gamma = 1.0;
  double sigma = 1.0;
  std::optional<Vector> x_prev;
  std::optional<Vector> r_prev;
  SpectralState spectral;
};

struct StepOutcome {
  Vector x_next;
  HifbsSolution next_solution;  // at x_next with the same gamma and eps_{k+1}
  IterationRecord record;       // step fields only (alpha, backtracks, envelopes, flags)
};

/// One outer iteration: direction, backtracking on alpha = vartheta^m, and the
/// fallback to y_bar after max_backtracks.
inline StepOutcome boosted_step(const CompositeProblem& problem, const HifbsOracle& inner, IterateState& st,
                                const SolverConfig& cfg) {
  const double p = problem.p();
  const double eps_k = cfg.epsilon(st.k);
  const double eps_next = cfg.epsilon(st.k + 1);
  const Vector& y_bar = st.solution.y_bar;
  const Vector& res = st.solution.residual;
  const double rhs = st.solution.envelope_value - st.sigma * power_norm(p, res) + eps_k + eps_next;

  StepOutcome out;
  out.record.acceptance_rhs = rhs;
  std::size_t inner_iters = 0;
  auto evaluate = [&](Vector cand, double alpha, std::size_t m) {
    HifbsSolution s = inner(cand, st.gamma, eps_next);
    inner_iters += s.inner_iterations;
    const bool ok = s.envelope_value <= rhs;
    if (ok) {
      out.x_next = std::move(cand);
      out.record.alpha = alpha;
      out.record.backtracks = m;
      out.record.envelope_next = s.envelope_value;
      out.next_solution = std::move(s);
    }
    return ok;
  };

  bool done = false;
  if (cfg.plain()) {
    HifbsSolution s = inner(y_bar, st.gamma, eps_next);
    inner_iters += s.inner_iterations;
    out.record.accepted = s.envelope_value <= rhs;
    out.record.alpha = 1.0;
    out.record.envelope_next = s.envelope_value;
    out.x_next = y_bar;
    out.next_solution = std::move(s);
    done = true;
  } else {
    Vector d;
    if (cfg.direction == Direction::spectral) {
      d = (st.x_prev && st.r_prev) ? spectral_direction(st.spectral, st.x, *st.x_prev, res, *st.r_prev).d
                                   : spectral_direction(st.spectral, res).d;
    } else {
      d = Vector::Zero(st.x.size());
    }
    double alpha = 1.0;
    for (std::size_t m = 0; m <= cfg.max_backtracks; ++m, alpha *= cfg.vartheta) {
      if (evaluate(structural_iterate(cfg.structural, alpha, st.x, y_bar, d), alpha, m)) {
        out.record.accepted = true;
        done = true;
        break;
      }
    }
  }
  if (!done) {
    HifbsSolution s = inner(y_bar, st.gamma, eps_next);
    inner_iters += s.inner_iterations;
    out.record.fallback = true;
    out.record.accepted = false;
    out.record.alpha = 1.0;
    out.record.backtracks = cfg.max_backtracks + 1;
    out.record.envelope_next = s.envelope_value;
    out.x_next = y_bar;
    out.next_solution = std::move(s);
  }
  out.record.inner_iterations = inner_iters;
  return out;
}

/// Runs HiFBA (structural A) or Boosted HiFBA until ||R_k|| < stop_residual_tol,
/// max_outer steps, or the time budget. With adaptive_lp, after every step
/// L_p = ||grad f(x^{k+1}) - grad f(x^k)|| / ||x^{k+1} - x^k||^{p-1}
/// (clamped to [1e-12, 1e12]) resets gamma = 0.99/L_p and
/// sigma = 0.99 (1 - gamma L_p)/(p gamma).
inline SolverTrace run(const CompositeProblem& problem, const HifbsOracle& inner, const Vector& x0,
                       const SolverConfig& cfg, const Observer& observer = {}) {
  cfg.validate(problem);
  require_dim(x0, problem.dim(), "run x0");
  if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");
  const double p = problem.p();
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
  };

  SolverTrace trace;
  trace.solver = cfg.plain() ? "hifba" : "boosted_hifba";
  trace.p = p;
  InvariantMonitor monitor(p, cfg.epsilon.total(), problem.lower_bound(), !cfg.adaptive_lp);
  IterateState st;
  st.x = x0;
  st.gamma = cfg.gamma;
  st.sigma = cfg.sigma;
  auto assert_monitors = [&] {
    if (cfg.strict_monitors && !monitors_ok(monitor.report())) {
      trace.monitors = monitor.report();
      trace.x_final = st.x;
      throw InvariantViolation("runtime monitor violated at k=" + std::to_string(st.k) +
                               ": acceptance=" + std::to_string(trace.monitors.acceptance_max_violation) +
                               " lyapunov=" + std::to_string(trace.monitors.lyapunov_max_violation) +
                               " summability=" + std::to_string(trace.monitors.summability_max_violation));
    }
  };

  Vector grad_x;

  auto abort = [&](const std::string& why) -> SolverAbort {
    trace.x_final = st.x;
    return SolverAbort(why, trace);
  };

  try {
    st.solution = inner(st.x, st.gamma, cfg.epsilon(0));
    if (cfg.adaptive_lp) grad_x = problem.f().gradient(st.x);

    for (;;) {
      IterationRecord rec;
      rec.k = st.k;
      rec.phi = problem.phi(st.x);
      rec.phi_prox = problem.phi(st.solution.y_bar);
      rec.envelope_inexact = st.solution.envelope_value;
      rec.residual_norm = st.solution.residual.norm();
      rec.epsilon_k = cfg.epsilon(st.k);
      rec.gamma_k = st.gamma;
      rec.sigma_k = st.sigma;
      if (rec.phi < trace.phi_best || trace.x_best.size() == 0) {
        trace.phi_best = rec.phi;
        trace.x_best = st.x;
      }
      rec.phi_best = trace.phi_best;
      if (observer) observer(rec, st.x);

      std::optional<Status> stop;
      if (rec.residual_norm < cfg.stop_residual_tol)
        stop = Status::converged;
      else if (st.k >= cfg.max_outer)
        stop = Status::max_outer;
      else if (elapsed_ms() >= cfg.time_budget * 1000.0)
        stop = Status::budget;
      if (stop) {
        rec.wall_time_ms = elapsed_ms();
        trace.records.push_back(rec);
        monitor.feed(rec);
        trace.status = *stop;
        break;
      }

      StepOutcome step = boosted_step(problem, inner, st, cfg);
      rec.alpha = step.record.alpha;
      rec.backtracks = step.record.backtracks;
      rec.envelope_next = step.record.envelope_next;
      rec.acceptance_rhs = step.record.acceptance_rhs;
      rec.accepted = step.record.accepted;
      rec.fallback = step.record.fallback;
      rec.inner_iterations = step.record.inner_iterations;
      rec.wall_time_ms = elapsed_ms();
      trace.records.push_back(rec);
      monitor.feed(rec);
      assert_monitors();

      st.x_prev = st.x;
      st.r_prev = st.solution.residual;
      st.x = std::move(step.x_next);
      st.solution = std::move(step.next_solution);
      ++st.k;

      if (cfg.adaptive_lp) {
        Vector grad_next = problem.f().gradient(st.x);
        if ((st.x - *st.x_prev).norm() > 0.0) {
          const double lp = std::clamp(estimate_lp(*st.x_prev, st.x, grad_x, grad_next, p), 1e-12, 1e12);
          const double gamma = 0.99 / lp;
          const double sigma = 0.99 * (1.0 - gamma * lp) / (p * gamma);
          if (gamma != st.gamma) {
            st.gamma = gamma;
            st.solution = inner(st.x, st.gamma, cfg.epsilon(st.k));
          }
          st.sigma = sigma;
        }
        grad_x = std::move(grad_next);
      }
    }
  } catch (const SolverAbort&) {
    throw;
  } catch (const InvariantViolation&) {
    throw;
  } catch (const std::exception& e) {
    throw abort(std::string("solver aborted: ") + e.what());
  }

  monitor.finish();
  assert_monitors();
  trace.monitors = monitor.report();
  trace.x_final = st.x;
  trace.metadata["gamma0"] = std::to_string(cfg.gamma);
  trace.metadata["epsilon"] = cfg.epsilon.describe();
  trace.metadata["adaptive_lp"] = cfg.adaptive_lp ? "true" : "false";
  return trace;
}

}  // namespace hifba
