// Sampling-based validation of high-order majorants.
//
// f has a high-order majorant of power p with constant L_p when
//   f(y) <= f(x) + <grad f(x), y - x> + (L_p / p) ||y - x||^p   for all x, y.
// Exact certification from oracles is impossible, so these checks evaluate the
// inequality on sampled pairs and keep the worst pair as a reproducible witness.
#pragma once

#include "hifba/core.hpp"
#include "hifba/random.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>

namespace hifba {

using PointPair = std::pair<Vector, Vector>;
using PairSampler = std::function<PointPair()>;

struct MajorantReport {
  bool holds = true;
  double worst_violation = -kInf;
  PointPair worst_pair;
  double worst_lambda = kNaN;  // only set by the paraconcavity check
  std::size_t samples_checked = 0;
  double tolerance = 1e-9;
};

/// Pairs drawn uniformly from a box, interleaved with near-diagonal pairs
/// y = x + delta, ||delta|| in {1e-3, 1e-1}.
class BoxPairSampler {
 public:
  BoxPairSampler(Vector lo, Vector hi, std::uint64_t seed, bool near_diagonal = true)
      : lo_(std::move(lo)), hi_(std::move(hi)), rng_(seed), near_diagonal_(near_diagonal) {
    if (lo_.size() != hi_.size() || lo_.size() == 0) throw std::invalid_argument("sampler box bounds mismatch");
    if ((hi_.array() < lo_.array()).any()) throw std::invalid_argument("sampler box has hi < lo");
  }

  BoxPairSampler(double lo, double hi, Index dim, std::uint64_t seed, bool near_diagonal = true)
      : BoxPairSampler(Vector::Constant(dim, lo), Vector::Constant(dim, hi), seed, near_diagonal) {}

  PointPair operator()() {
    const Vector x = draw_point();
    const int phase = near_diagonal_ ? static_cast<int>(count_++ % 3) : 0;
    if (phase == 0) return {x, draw_point()};
    const double radius = phase == 1 ? 1e-3 : 1e-1;
    Vector dir(x.size());
    for (Index i = 0; i < dir.size(); ++i) dir[i] = rng_.normal();
    double n = dir.norm();
    if (n == 0.0) {
      dir.setZero();
      dir[0] = 1.0;
      n = 1.0;
    }
    return {x, x + (radius / n) * dir};
  }

  Rng& rng() { return rng_; }

 private:
  Vector draw_point() {
    Vector x(lo_.size());
    for (Index i = 0; i < x.size(); ++i) x[i] = rng_.uniform(lo_[i], hi_[i]);
    return x;
  }

  Vector lo_, hi_;
  Rng rng_;
  bool near_diagonal_;
  std::uint64_t count_ = 0;
};

namespace detail {

inline void record(MajorantReport& report, double violation, const Vector& x, const Vector& y, double lambda) {
  ++report.samples_checked;
  if (violation > report.worst_violation) {
    report.worst_violation = violation;
    report.worst_pair = {x, y};
    report.worst_lambda = lambda;
  }
}

inline void finish(MajorantReport& report) { report.holds = report.worst_violation <= report.tolerance; }

}  // namespace detail

/// f(y) - f(x) - <grad f(x), y - x> - (L_p / p) ||y - x||^p for one pair.
inline double majorant_violation(const SmoothOracle& f, double p, double lp, const Vector& x, const Vector& y) {
  const double rhs = f.value(x) + f.gradient(x).dot(y - x) + lp / p * power_norm(p, y - x);
  return f.value(y) - rhs;
}

inline MajorantReport check_majorant(const SmoothOracle& f, double p, double lp, std::span<const PointPair> pairs,
                                     double tol = 1e-9) {
  require_power(p);
  if (!(lp > 0.0)) throw std::invalid_argument("L_p must be > 0");
  if (pairs.empty()) throw std::invalid_argument("at least one sample pair is required");
  MajorantReport report;
  report.tolerance = tol;
  for (const auto& [x, y] : pairs) detail::record(report, majorant_violation(f, p, lp, x, y), x, y, kNaN);
  detail::finish(report);
  return report;
}

inline MajorantReport check_majorant(const SmoothOracle& f, double p, double lp, const PairSampler& sampler,
                                     std::size_t n_samples, double tol = 1e-9) {
  if (n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
  std::vector<PointPair> pairs;
  pairs.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) pairs.push_back(sampler());
  return check_majorant(f, p, lp, pairs, tol);
}

/// lambda f(x) + (1 - lambda) f(y) - f(lambda x + (1 - lambda) y) - c ||x - y||^p.
inline double paraconcavity_violation(const SmoothOracle& f, double p, double c, const Vector& x, const Vector& y,
                                      double lambda) {
  const Vector mid = lambda * x + (1.0 - lambda) * y;
  return lambda * f.value(x) + (1.0 - lambda) * f.value(y) - f.value(mid) - c * power_norm(p, x - y);
}

/// Checks lambda f(x) + (1-lambda) f(y) <= f(lambda x + (1-lambda) y) + c ||x-y||^p.
/// Each sampled pair is tested at lambda in {0, 1/4, 1/2, 3/4, 1} plus one
/// uniform draw from `lambda_seed`'s stream.
inline MajorantReport check_paraconcavity(const SmoothOracle& f, double p, double c, const PairSampler& sampler,
                                          std::size_t n_samples, double tol = 1e-9, std::uint64_t lambda_seed = 7) {
  require_power(p);
  if (!(c > 0.0)) throw std::invalid_argument("paraconcavity constant must be > 0");
  if (n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
  static constexpr std::array<double, 5> kAnchors{0.0, 0.25, 0.5, 0.75, 1.0};
  Rng rng(lambda_seed);
  MajorantReport report;
  report.tolerance = tol;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto [x, y] = sampler();
    for (double lambda : kAnchors) detail::record(report, paraconcavity_violation(f, p, c, x, y, lambda), x, y, lambda);
    const double lambda = rng.uniform();
    detail::record(report, paraconcavity_violation(f, p, c, x, y, lambda), x, y, lambda);
  }
  detail::finish(report);
  return report;
}

/// Local estimate ||g_cur - g_prev|| / ||x_cur - x_prev||^{p-1}.
inline double estimate_lp(const Vector& x_prev, const Vector& x_cur, const Vector& g_prev, const Vector& g_cur,
                          double p) {
  require_power(p);
  const double dx = (x_cur - x_prev).norm();
  if (dx == 0.0) throw std::invalid_argument("estimate_lp: identical points");
  return (g_cur - g_prev).norm() / std::pow(dx, p - 1.0);
}

}  // namespace hifba
