// Regularized nonnegative matrix factorization
//
//   phi(U, V) = 1/2 ||X - U V^T||_F^2 + i{U >= 0} + i{V >= 0} + lambda (||U||_1 + ||V||_1)
//
// and its relative-smoothness reformulation with the quartic kernel
//   h(U, V) = a/4 (||U||^2 + ||V||^2)^2 + b/2 (||U||^2 + ||V||^2).
// With a >= 3 and b >= ||X||_F, h - f is convex, so f~ = f - h is concave and
// phi = f~ + (g + h) has a smooth part with a majorant of every power p > 1.
#pragma once

#include "hifba/core.hpp"
#include "hifba/random.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

namespace hifba {

struct NmfState {
  Matrix X;
  Matrix U;
  Matrix V;
  double lambda = 0.0;
  double kernel_a = 3.0;
  double kernel_b = 0.0;
  Index rank = 0;

  Index m() const { return X.rows(); }
  Index n() const { return X.cols(); }
  Index packed_size() const { return (X.rows() + X.cols()) * rank; }

  /// Throws unless shapes agree, X >= 0, lambda >= 0, a, b > 0 and, unless `force`,
  /// the kernel satisfies a >= 3 and b >= ||X||_F.
  void validate(bool force = false) const {
    if (X.size() == 0) throw std::invalid_argument("NMF data matrix is empty");
    if (rank <= 0) throw std::invalid_argument("NMF rank must be positive");
    if (U.rows() != m() || U.cols() != rank || V.rows() != n() || V.cols() != rank)
      throw DimensionError("NMF factor shapes do not match X and rank");
    if ((X.array() < 0.0).any() || X.hasNaN()) throw std::invalid_argument("NMF data matrix must be nonnegative");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
    if (!(kernel_a > 0.0) || !(kernel_b > 0.0)) throw std::invalid_argument("kernel parameters a and b must be > 0");
    if (!force && (kernel_a < 3.0 || kernel_b < X.norm()))
      throw std::invalid_argument("kernel requires a >= 3 and b >= ||X||_F (got a=" + std::to_string(kernel_a) +
                                  ", b=" + std::to_string(kernel_b) + ", ||X||_F=" + std::to_string(X.norm()) + ")");
  }
};

/// State with the standard kernel (a = 3, b = ||X||_F) and factors 0.1 * ones.
inline NmfState make_nmf_state(Matrix X, Index rank, double lambda) {
  NmfState s;
  s.kernel_b = X.norm();
  s.U = Matrix::Constant(X.rows(), rank, 0.1);
  s.V = Matrix::Constant(X.cols(), rank, 0.1);
  s.X = std::move(X);
  s.lambda = lambda;
  s.rank = rank;
  return s;
}

/// m x n matrix with iid Uniform(lo, hi) entries.
inline Matrix uniform_matrix(Index m, Index n, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) X(i, j) = rng.uniform(lo, hi);
  return X;
}

// Points of the NMF problems are (U, V) packed column-major: vec(U) then vec(V).
inline Vector pack_factors(const Matrix& U, const Matrix& V) {
  Vector x(U.size() + V.size());
  x.head(U.size()) = Eigen::Map<const Vector>(U.data(), U.size());
  x.tail(V.size()) = Eigen::Map<const Vector>(V.data(), V.size());
  return x;
}

inline std::pair<Matrix, Matrix> unpack_factors(const NmfState& s, const Vector& x) {
  require_dim(x, s.packed_size(), "unpack_factors");
  const Index mu = s.m() * s.rank;
  Matrix U = Eigen::Map<const Matrix>(x.data(), s.m(), s.rank);
  Matrix V = Eigen::Map<const Matrix>(x.data() + mu, s.n(), s.rank);
  return {std::move(U), std::move(V)};
}

inline double nmf_objective(const Matrix& X, const Matrix& U, const Matrix& V, double lambda) {
  if ((U.array() < 0.0).any() || (V.array() < 0.0).any()) return kInf;
  const double fit = 0.5 * (X - U * V.transpose()).squaredNorm();
  return fit + lambda * (U.sum() + V.sum());
}

inline double nmf_objective(const NmfState& s) { return nmf_objective(s.X, s.U, s.V, s.lambda); }

struct FactorGradient {
  Matrix grad_U;
  Matrix grad_V;
};

/// Gradient of 1/2 ||X - U V^T||_F^2.
inline FactorGradient nmf_fit_gradient(const Matrix& X, const Matrix& U, const Matrix& V) {
  const Matrix E = U * V.transpose() - X;
  return {E * V, E.transpose() * U};
}

struct KernelEval {
  double h_value = 0.0;
  Matrix grad_U;
  Matrix grad_V;
};

inline KernelEval nmf_kernel(double a, double b, const Matrix& U, const Matrix& V) {
  const double t = U.squaredNorm() + V.squaredNorm();
  const double scale = a * t + b;
  return {a / 4.0 * t * t + b / 2.0 * t, scale * U, scale * V};
}

inline KernelEval nmf_kernel(const NmfState& s, const Matrix& U, const Matrix& V) {
  return nmf_kernel(s.kernel_a, s.kernel_b, U, V);
}

/// phi = f~ + g~ with f~ = f - h (concave) and g~ = g + h. The returned problem
/// has p = 2, evaluates phi directly through nmf_objective, and has lower bound 0.
/// The subgradient of g~ uses sign-based l1 elements (0 at zero entries).
inline CompositeProblem nmf_reformulate(std::shared_ptr<const NmfState> state) {
  state->validate(true);
  const Index dim = state->packed_size();

  SmoothOracle f;
  f.dim = dim;
  f.eval = [state](const Vector& x) {
    auto [U, V] = unpack_factors(*state, x);
    return 0.5 * (state->X - U * V.transpose()).squaredNorm() - nmf_kernel(*state, U, V).h_value;
  };
  f.grad = [state](const Vector& x) {
    auto [U, V] = unpack_factors(*state, x);
    const FactorGradient fg = nmf_fit_gradient(state->X, U, V);
    const KernelEval k = nmf_kernel(*state, U, V);
    return pack_factors(fg.grad_U - k.grad_U, fg.grad_V - k.grad_V);
  };

  NonsmoothOracle g;
  g.eval = [state](const Vector& x) {
    if ((x.array() < 0.0).any()) return kInf;
    auto [U, V] = unpack_factors(*state, x);
    return state->lambda * x.sum() + nmf_kernel(*state, U, V).h_value;
  };
  g.subgrad = [state](const Vector& x) {
    auto [U, V] = unpack_factors(*state, x);
    const KernelEval k = nmf_kernel(*state, U, V);
    Vector s = pack_factors(k.grad_U, k.grad_V);
    for (Index i = 0; i < x.size(); ++i)
      if (x[i] > 0.0) s[i] += state->lambda;
    return s;
  };
  g.lower_bound = 0.0;

  CompositeProblem problem(std::move(f), std::move(g), 2.0);
  problem.set_objective([state](const Vector& x) {
    auto [U, V] = unpack_factors(*state, x);
    return nmf_objective(state->X, U, V, state->lambda);
  });
  problem.set_lower_bound(0.0);
  return problem;
}

}  // namespace hifba
