// Small one-dimensional composite problems with known majorant constants.
// They back the envelope property suites and several tests.
#pragma once

#include "hifba/core.hpp"
#include "hifba/hifbs.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace hifba {

using Scalar1 = std::function<double(double)>;

inline SmoothOracle smooth_1d(Scalar1 f, Scalar1 df, std::optional<double> lb = std::nullopt) {
  SmoothOracle o;
  o.dim = 1;
  o.eval = [f](const Vector& x) { return f(x[0]); };
  o.grad = [df](const Vector& x) { return Vector::Constant(1, df(x[0])); };
  o.lower_bound = lb;
  return o;
}

inline NonsmoothOracle nonsmooth_1d(Scalar1 g, Scalar1 dg, std::optional<double> lb = std::nullopt) {
  NonsmoothOracle o;
  o.eval = [g](const Vector& x) { return g(x[0]); };
  o.subgrad = [dg](const Vector& x) { return Vector::Constant(1, dg(x[0])); };
  o.lower_bound = lb;
  return o;
}

inline double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

struct ToyProblem {
  std::string name;
  CompositeProblem problem;
  double lp;         // a valid majorant constant for f with power problem.p()
  GridBox box;       // contains the minimizers of phi and of every model used
  double phi_min;    // inf phi (closed form)
};

/// f = x^2/2, g = |x|; p = 2, L = 1; min 0 at 0.
inline ToyProblem toy_abs_quadratic() {
  CompositeProblem p(smooth_1d([](double x) { return 0.5 * x * x; }, [](double x) { return x; }, 0.0),
                     nonsmooth_1d([](double x) { return std::abs(x); }, [](double x) { return sgn(x); }, 0.0), 2.0,
                     1.0);
  return {"abs_quadratic", std::move(p), 1.0, {Vector::Constant(1, -3.0), Vector::Constant(1, 3.0)}, 0.0};
}

/// f = (x + 1)^2/2, g = i{x >= 0}; p = 2, L = 1. The constraint is active:
/// min 1/2 at 0.
inline ToyProblem toy_constrained_shift() {
  CompositeProblem p(smooth_1d([](double x) { return 0.5 * (x + 1.0) * (x + 1.0); }, [](double x) { return x + 1.0; }),
                     nonsmooth_1d([](double x) { return x >= 0.0 ? 0.0 : kInf; }, [](double) { return 0.0; }, 0.0),
                     2.0, 1.0);
  return {"constrained_shift", std::move(p), 1.0, {Vector::Constant(1, -2.0), Vector::Constant(1, 3.0)}, 0.5};
}

/// f = |x - 1|^{1.5}/1.5 (Hoelder gradient, p = 1.5, L = 2^{1/2}), g = clipped penalty
/// 2|x| - x^2 for |x| <= 1, 1 otherwise; min 2/3 at the kink x = 0.
inline ToyProblem toy_holder_clipped() {
  const double q = 1.5;
  CompositeProblem p(
      smooth_1d([q](double x) { return std::pow(std::abs(x - 1.0), q) / q; },
                [q](double x) { return sgn(x - 1.0) * std::pow(std::abs(x - 1.0), q - 1.0); }, 0.0),
      nonsmooth_1d(
          [](double x) {
            const double a = std::abs(x);
            return a <= 1.0 ? 2.0 * a - a * a : 1.0;
          },
          [](double x) {
            const double a = std::abs(x);
            return (a > 0.0 && a < 1.0) ? 2.0 * (sgn(x) - x) : 0.0;
          },
          0.0),
      q, std::pow(2.0, 2.0 - q));
  return {"holder_clipped", std::move(p), std::pow(2.0, 2.0 - q), {Vector::Constant(1, -3.0), Vector::Constant(1, 4.0)},
          2.0 / 3.0};
}

/// f = cos x + x^2/10 (f'' <= 6/5), g = 0.3 |x|; p = 2, L = 1.2. Nonconvex with
/// two symmetric global minimizers near +-2.28.
inline ToyProblem toy_cosine() {
  CompositeProblem p(smooth_1d([](double x) { return std::cos(x) + 0.1 * x * x; },
                               [](double x) { return -std::sin(x) + 0.2 * x; }),
                     nonsmooth_1d([](double x) { return 0.3 * std::abs(x); }, [](double x) { return 0.3 * sgn(x); }, 0.0),
                     2.0, 1.2);
  // phi is convex on [2, 4] (phi'' = -cos x + 0.2 > 0 there); golden-section search.
  auto phi = [](double x) { return std::cos(x) + 0.1 * x * x + 0.3 * x; };
  double a = 2.0, b = 4.0;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 200; ++i) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (phi(c) < phi(d))
      b = d;
    else
      a = c;
  }
  return {"cosine", std::move(p), 1.2, {Vector::Constant(1, -7.0), Vector::Constant(1, 7.0)}, phi(0.5 * (a + b))};
}

/// f = -x^2/2 (concave: any L > 0 works for every p), g = x^4/4; p = 3.
/// min -1/4 at x = +-1.
inline ToyProblem toy_concave_quartic() {
  CompositeProblem p(smooth_1d([](double x) { return -0.5 * x * x; }, [](double x) { return -x; }),
                     nonsmooth_1d([](double x) { return 0.25 * x * x * x * x; }, [](double x) { return x * x * x; }),
                     3.0, 1e-6);
  p.set_lower_bound(-0.25);
  return {"concave_quartic", std::move(p), 1e-6, {Vector::Constant(1, -3.0), Vector::Constant(1, 3.0)}, -0.25};
}

inline std::vector<ToyProblem> toy_problems() {
  std::vector<ToyProblem> out;
  out.push_back(toy_abs_quadratic());
  out.push_back(toy_constrained_shift());
  out.push_back(toy_holder_clipped());
  out.push_back(toy_cosine());
  out.push_back(toy_concave_quartic());
  return out;
}

}  // namespace hifba
