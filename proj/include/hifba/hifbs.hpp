// Elements of the high-order forward-backward splitting mapping
//
//   T(x) = argmin_y  f(x) + <grad f(x), y - x> + g(y) + ||x - y||^p / (p gamma)
//
// and the envelope value (the infimum). Three routes are provided: the
// subgradient inner solver with geometrically decaying steps used by the
// algorithms, an exhaustive grid search for dimension <= 2 used as a test
// oracle, and (in hifbs_nmf.hpp) the closed form for the NMF reformulation.
#pragma once

#include "hifba/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hifba {

struct HifbsSolution {
  Vector y_bar;
  double envelope_value = kInf;  // model value at y_bar (inexact envelope)
  Vector residual;               // x - y_bar
  double epsilon_used = 0.0;
  std::size_t inner_iterations = 0;
};

/// Signature shared by every inner solver: (x, gamma, epsilon) -> approximate
/// HiFBS element. epsilon is the accuracy budget the caller accounts for.
using HifbsOracle = std::function<HifbsSolution(const Vector& x, double gamma, double epsilon)>;

struct InnerSolverConfig {
  double beta0 = 0.9;
  std::size_t max_inner = 25;
  double step_tol = 1e-3;
  // Extra passes restarted from the best point with beta squared each time.
  // A pass that gained more than the epsilon target, or nothing at all (steps
  // too coarse for the local scale), triggers the next one.
  std::size_t max_restarts = 0;

  void validate() const {
    if (!(beta0 > 0.0 && beta0 < 1.0)) throw std::invalid_argument("beta0 must lie in (0, 1)");
    if (max_inner == 0) throw std::invalid_argument("max_inner must be >= 1");
    if (!(step_tol >= 0.0)) throw std::invalid_argument("step_tol must be >= 0");
  }
};

inline HifbsSolution make_solution(const CompositeProblem& problem, const Linearization& lin, Vector y, double gamma,
                                   double epsilon, std::size_t inner) {
  HifbsSolution s;
  s.envelope_value = model_value(problem, lin, y, gamma);
  s.residual = lin.x - y;
  s.y_bar = std::move(y);
  s.epsilon_used = epsilon;
  s.inner_iterations = inner;
  return s;
}

/// Normalized subgradient descent on y -> model(x, y) from y = x with steps
/// beta^{i+1}. Returns the best visited point by model value.
inline HifbsSolution solve_hifbs_sggdss(const CompositeProblem& problem, const Vector& x, double gamma,
                                        const InnerSolverConfig& cfg, double epsilon_target = 0.0) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  cfg.validate();
  require_dim(x, problem.dim(), "solve_hifbs_sggdss");
  const Linearization lin(problem, x);
  const double p = problem.p();

  Vector best = x;
  double best_value = model_value(problem, lin, x, gamma);
  std::size_t total = 0;
  double beta = cfg.beta0;

  for (std::size_t pass = 0; pass <= cfg.max_restarts; ++pass) {
    const double pass_start = best_value;
    Vector y = best;
    double step = beta;
    bool stationary = false;
    for (std::size_t i = 0; i < cfg.max_inner; ++i) {
      Vector zeta = lin.grad + problem.g().subgradient(y) + power_grad(p, y - x) / gamma;
      const double zn = zeta.norm();
      if (zn == 0.0) {
        stationary = true;
        break;
      }
      y -= (step / zn) * zeta;
      ++total;
      const double v = model_value(problem, lin, y, gamma);
      if (v < best_value) {
        best_value = v;
        best = y;
      }
      // ||y^{i+1} - y^i|| equals the step length for normalized steps.
      if (step < cfg.step_tol) break;
      step *= beta;
    }
    const double gain = pass_start - best_value;
    if (stationary || (gain > 0.0 && gain <= epsilon_target)) break;
    beta *= beta;
  }
  return make_solution(problem, lin, std::move(best), gamma, epsilon_target, total);
}

inline HifbsOracle make_sggdss_oracle(const CompositeProblem& problem, InnerSolverConfig cfg) {
  cfg.validate();
  return [&problem, cfg](const Vector& x, double gamma, double eps) {
    return solve_hifbs_sggdss(problem, x, gamma, cfg, eps);
  };
}

struct GridBox {
  Vector lo;
  Vector hi;
};

namespace detail {

inline GridBox default_box(const Vector& center) {
  return {center.array() - 5.0, center.array() + 5.0};
}

inline void check_grid_args(const GridBox& box, Index dim, std::size_t resolution) {
  if (dim > 2) throw std::invalid_argument("grid oracle supports dimension <= 2");
  if (resolution < 3) throw std::invalid_argument("grid resolution must be >= 3");
  if (box.lo.size() != dim || box.hi.size() != dim) throw DimensionError("grid box dimension mismatch");
  if ((box.hi.array() < box.lo.array()).any()) throw std::invalid_argument("grid box has hi < lo");
}

inline double grid_coord(const GridBox& box, Index d, std::size_t i, std::size_t resolution) {
  if (i + 1 == resolution) return box.hi[d];
  const double h = (box.hi[d] - box.lo[d]) / static_cast<double>(resolution - 1);
  return box.lo[d] + static_cast<double>(i) * h;
}

/// Minimizes `fn` over a tensor grid (plus an optional extra candidate point).
template <typename Fn>
std::pair<Vector, double> grid_argmin(Fn&& fn, const GridBox& box, std::size_t resolution,
                                      const std::optional<Vector>& extra) {
  const Index dim = box.lo.size();
  Vector best;
  double best_value = kInf;
  if (extra) {
    best = *extra;
    best_value = fn(best);
  }
  Vector y(dim);
  const std::size_t inner = dim == 2 ? resolution : 1;
  for (std::size_t i = 0; i < resolution; ++i) {
    y[0] = grid_coord(box, 0, i, resolution);
    for (std::size_t j = 0; j < inner; ++j) {
      if (dim == 2) y[1] = grid_coord(box, 1, j, resolution);
      const double v = fn(y);
      if (v < best_value) {
        best_value = v;
        best = y;
      }
    }
  }
  if (best.size() == 0) best = y;  // everything was +inf
  return {best, best_value};
}

}  // namespace detail

/// Exhaustive minimization of the model over a grid (dimension <= 2). The base
/// point x itself is always a candidate, so envelope_value <= phi(x) exactly.
inline HifbsSolution solve_hifbs_grid(const CompositeProblem& problem, const Vector& x, double gamma,
                                      const std::optional<GridBox>& box, std::size_t resolution) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  require_dim(x, problem.dim(), "solve_hifbs_grid");
  const GridBox b = box ? *box : detail::default_box(x);
  detail::check_grid_args(b, problem.dim(), resolution);
  const Linearization lin(problem, x);
  auto [y, v] = detail::grid_argmin([&](const Vector& y) { return model_value(problem, lin, y, gamma); }, b, resolution,
                                    x);
  (void)v;
  const std::size_t evaluations = problem.dim() == 2 ? resolution * resolution : resolution;
  return make_solution(problem, lin, std::move(y), gamma, 0.0, evaluations);
}

/// Grid oracle whose box is [x - half_width, x + half_width] per coordinate.
inline HifbsOracle make_grid_oracle(const CompositeProblem& problem, double half_width, std::size_t resolution) {
  return [&problem, half_width, resolution](const Vector& x, double gamma, double eps) {
    GridBox box{x.array() - half_width, x.array() + half_width};
    HifbsSolution s = solve_hifbs_grid(problem, x, gamma, box, resolution);
    s.epsilon_used = eps;
    return s;
  };
}

/// Grid minimizer of the high-order proximal problem g(y) + ||z - y||^p / (p gamma).
/// Used to contrast the forward-backward mapping with a prox of g at the
/// forward point z = x - gamma grad f(x).
inline Vector solve_hope_grid(const NonsmoothOracle& g, const Vector& z, double gamma, double p,
                              const std::optional<GridBox>& box, std::size_t resolution) {
  require_power(p);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  const GridBox b = box ? *box : detail::default_box(z);
  detail::check_grid_args(b, z.size(), resolution);
  auto fn = [&](const Vector& y) {
    const double gy = g.value(y);
    if (gy == kInf) return kInf;
    return gy + power_norm(p, z - y) / (p * gamma);
  };
  return detail::grid_argmin(fn, b, resolution, z).first;
}

/// Unique r >= 0 with a3 r^3 + a1 r - a0 = 0 (a3 >= 0, a1 > 0, a0 > 0).
/// Safeguarded Newton on the bracket [0, min(a0/a1, cbrt(a0/a3))]; the
/// left-hand side is strictly increasing so the bracket never loses the root.
/// Runs to full relative precision in r.
inline double cubic_positive_root(double a3, double a1, double a0) {
  if (!(a3 >= 0.0) || !(a1 > 0.0) || !(a0 > 0.0))
    throw std::invalid_argument("cubic_positive_root requires a3 >= 0, a1 > 0, a0 > 0");
  auto lhs = [&](double r) { return (a3 * r * r + a1) * r - a0; };
  double lo = 0.0;
  double hi = a0 / a1;
  if (a3 > 0.0) hi = std::min(hi, std::cbrt(a0 / a3));
  if (lhs(hi) <= 0.0) return hi;

  double r = hi;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0; it < 200; ++it) {
    const double v = lhs(r);
    if (v == 0.0) return r;
    if (v < 0.0)
      lo = r;
    else
      hi = r;
    const double slope = 3.0 * a3 * r * r + a1;
    double next = r - v / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 2.0 * eps * r || hi - lo <= 4.0 * eps * hi) {
      r = next;
      break;
    }
    r = next;
  }
  // Bracket collapsed to adjacent doubles: pick the endpoint with smaller residual.
  const double candidates[] = {lo, r, hi};
  double best = r;
  for (double c : candidates)
    if (std::abs(lhs(c)) < std::abs(lhs(best))) best = c;
  return best;
}

}  // namespace hifba
