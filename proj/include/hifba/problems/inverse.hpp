// Regularized linear inverse problems with an l_q fidelity and the clipped
// quadratic penalty:
//
//   min_x  (1/q) sum_i |Ax - b|_i^q + lambda sum_i c(x_i),
//   c(t) = 2|t| - t^2 if |t| <= 1, 1 otherwise.
//
// The fidelity has a high-order majorant with p = q, so the composite problem
// is built with p = q.
#pragma once

#include "hifba/core.hpp"
#include "hifba/random.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>

namespace hifba {

struct InverseInstance {
  Matrix A;
  Vector b;
  Vector x_true;
  double q = 2.0;
  double lambda = 1.0;
};

inline void validate_q(double q) {
  if (!(q > 1.0 && q <= 2.0)) throw std::invalid_argument("q must lie in (1, 2], got " + std::to_string(q));
}

/// Laplace scale for a given noise level: s = noise_level ||b_true|| / sqrt(2m).
inline double laplace_scale(double b_true_norm, Index m, double noise_level) {
  return noise_level * b_true_norm / std::sqrt(2.0 * static_cast<double>(m));
}

/// A ~ N(0, 1/m) iid; x_true with ceil(sparsity n) nonzeros at uniform
/// positions, values N(0, 25); b = A x_true + Laplace(0, s) noise.
/// Draw order from the seeded stream: A column-major, support positions,
/// support values, noise.
inline InverseInstance gen_inverse(Index m, Index n, double sparsity, double noise_level, double q, double lambda,
                                   std::uint64_t seed) {
  if (m <= 0 || n <= 0) throw std::invalid_argument("m and n must be positive");
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw std::invalid_argument("sparsity must lie in (0, 1)");
  if (!(noise_level >= 0.0)) throw std::invalid_argument("noise_level must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  validate_q(q);
  const double support_real = sparsity * static_cast<double>(n);
  if (support_real < 1.0) throw std::invalid_argument("sparsity * n must be >= 1");
  const auto support = static_cast<std::size_t>(std::ceil(support_real - 1e-9));

  Rng rng(seed);
  InverseInstance inst;
  inst.q = q;
  inst.lambda = lambda;
  inst.A.resize(m, n);
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) inst.A(i, j) = rng.normal(0.0, sd);

  inst.x_true = Vector::Zero(n);
  const auto positions = rng.sample_indices(static_cast<std::size_t>(n), support);
  for (std::size_t pos : positions) inst.x_true[static_cast<Index>(pos)] = rng.normal(0.0, 5.0);

  const Vector b_true = inst.A * inst.x_true;
  inst.b = b_true;
  if (noise_level > 0.0) {
    const double s = laplace_scale(b_true.norm(), m, noise_level);
    for (Index i = 0; i < m; ++i) inst.b[i] += rng.laplace(s);
  }
  return inst;
}

struct FidelityEval {
  double value = 0.0;
  Vector grad;
};

inline FidelityEval lq_fidelity(const InverseInstance& inst, const Vector& x) {
  validate_q(inst.q);
  require_dim(x, inst.A.cols(), "lq_fidelity");
  const Vector r = inst.A * x - inst.b;
  const double q = inst.q;
  Vector w(r.size());
  double value = 0.0;
  for (Index i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]);
    value += std::pow(a, q);
    w[i] = a == 0.0 ? 0.0 : std::copysign(std::pow(a, q - 1.0), r[i]);
  }
  return {value / q, inst.A.transpose() * w};
}

struct PenaltyEval {
  double value = 0.0;
  Vector subgrad;
};

/// Value and one subgradient element: 2 lambda (sign(t) - t) on 0 < |t| < 1,
/// 0 for |t| >= 1, and 0 at t = 0 (minimal-norm element of [-2 lambda, 2 lambda]).
inline PenaltyEval clipped_penalty(const Vector& x, double lambda) {
  PenaltyEval out{0.0, Vector::Zero(x.size())};
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a <= 1.0) {
      out.value += 2.0 * a - a * a;
      if (a > 0.0 && a < 1.0) out.subgrad[i] = 2.0 * lambda * (std::copysign(1.0, x[i]) - x[i]);
    } else {
      out.value += 1.0;
    }
  }
  out.value *= lambda;
  return out;
}

inline CompositeProblem make_inverse_problem(std::shared_ptr<const InverseInstance> inst) {
  validate_q(inst->q);
  SmoothOracle f;
  f.dim = inst->A.cols();
  f.eval = [inst](const Vector& x) { return lq_fidelity(*inst, x).value; };
  f.grad = [inst](const Vector& x) { return lq_fidelity(*inst, x).grad; };
  f.lower_bound = 0.0;

  NonsmoothOracle g;
  g.eval = [inst](const Vector& x) { return clipped_penalty(x, inst->lambda).value; };
  g.subgrad = [inst](const Vector& x) { return clipped_penalty(x, inst->lambda).subgrad; };
  g.lower_bound = 0.0;

  return CompositeProblem(std::move(f), std::move(g), inst->q);
}

/// 10 log10(||x_true|| / ||x_hat - x_true||), unsquared; +inf for an exact match.
/// With `squared` the conventional 20 log10 form is returned instead.
inline double snr_db(const Vector& x_true, const Vector& x_hat, bool squared = false) {
  if (x_true.size() != x_hat.size()) throw DimensionError("snr_db: length mismatch");
  const double err = (x_hat - x_true).norm();
  if (err == 0.0) return kInf;
  return (squared ? 20.0 : 10.0) * std::log10(x_true.norm() / err);
}

inline double relative_error(const Vector& x_true, const Vector& x_hat) {
  return (x_hat - x_true).norm() / x_true.norm();
}

}  // namespace hifba
