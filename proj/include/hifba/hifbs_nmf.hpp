// Closed-form subproblems for the NMF reformulation.
//
// Both the forward-backward step (p = 2) and the Bregman proximal gradient step
// reduce to
//     min_{U,V >= 0}  <Theta_U, U> + <Theta_V, V> + a/4 t^2 + c/2 t,
//     t = ||U||_F^2 + ||V||_F^2,
// whose minimizer is (U, V) = r (P+(-Theta_U), P+(-Theta_V)) with r >= 0 the
// root of a (A_U^2 + A_V^2) r^3 + c r - 1 = 0, A = ||P+(-Theta)||_F.
#pragma once

#include "hifba/core.hpp"
#include "hifba/hifbs.hpp"
#include "hifba/problems/nmf.hpp"

#include <memory>
#include <stdexcept>

namespace hifba {

struct NmfFactors {
  Matrix U;
  Matrix V;
};

/// Minimizer of <Theta_U, U> + <Theta_V, V> + a/4 t^2 + c/2 t over U, V >= 0.
/// When both projections vanish the minimizer is (0, 0).
inline NmfFactors quartic_positive_step(const Matrix& theta_U, const Matrix& theta_V, double a, double c) {
  Matrix PU = (-theta_U).cwiseMax(0.0);
  Matrix PV = (-theta_V).cwiseMax(0.0);
  const double A2 = PU.squaredNorm() + PV.squaredNorm();
  if (A2 == 0.0) return {Matrix::Zero(theta_U.rows(), theta_U.cols()), Matrix::Zero(theta_V.rows(), theta_V.cols())};
  const double r = cubic_positive_root(a * A2, c, 1.0);
  return {r * PU, r * PV};
}

/// Forward-backward (p = 2) step on the reformulated problem at (U, V):
/// Theta = grad f - grad h - (U, V)/gamma + lambda, cubic a A^2 r^3 + (b + 1/gamma) r - 1.
inline NmfFactors solve_hifbs_nmf(const NmfState& state, const Matrix& U, const Matrix& V, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  const FactorGradient fg = nmf_fit_gradient(state.X, U, V);
  const KernelEval k = nmf_kernel(state, U, V);
  const Matrix theta_U = (fg.grad_U - k.grad_U - U / gamma).array() + state.lambda;
  const Matrix theta_V = (fg.grad_V - k.grad_V - V / gamma).array() + state.lambda;
  return quartic_positive_step(theta_U, theta_V, state.kernel_a, state.kernel_b + 1.0 / gamma);
}

/// Bregman proximal gradient step argmin <grad f, Y> + g(Y) + D_h(Y, (U,V)) / gamma.
/// Multiplying by gamma: Theta = gamma (grad f + lambda) - grad h, cubic a A^2 r^3 + b r - 1.
inline NmfFactors bpg_nmf_step(const NmfState& state, const Matrix& U, const Matrix& V, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  const FactorGradient fg = nmf_fit_gradient(state.X, U, V);
  const KernelEval k = nmf_kernel(state, U, V);
  const Matrix theta_U = gamma * (fg.grad_U.array() + state.lambda).matrix() - k.grad_U;
  const Matrix theta_V = gamma * (fg.grad_V.array() + state.lambda).matrix() - k.grad_V;
  return quartic_positive_step(theta_U, theta_V, state.kernel_a, state.kernel_b);
}

/// Exact HiFBS oracle for `problem = nmf_reformulate(state)`.
inline HifbsOracle make_nmf_closed_form_oracle(std::shared_ptr<const NmfState> state, const CompositeProblem& problem) {
  return [state, &problem](const Vector& x, double gamma, double eps) {
    auto [U, V] = unpack_factors(*state, x);
    const NmfFactors next = solve_hifbs_nmf(*state, U, V, gamma);
    const Linearization lin(problem, x);
    return make_solution(problem, lin, pack_factors(next.U, next.V), gamma, eps, 1);
  };
}

}  // namespace hifba
