// Problem abstractions shared by every solver in hifba.
//
// A composite problem is phi = f + g with f smooth (finite everywhere) and g
// proper lsc, possibly taking the value +inf. Extended reals are plain
// doubles: +inf is a legal value of g, and any sum involving +inf is +inf
// (including inf - inf). NaN coming out of user oracles is never propagated;
// it raises OracleError instead.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace hifba {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sum in the extended reals with the convention inf - inf = +inf.
inline double ext_add(double a, double b) {
  if (a == kInf || b == kInf) return kInf;
  return a + b;
}

inline double checked_value(double v, const char* what) {
  if (std::isnan(v)) throw OracleError(std::string(what) + " returned NaN");
  return v;
}

inline const Vector& checked_vector(const Vector& v, Index dim, const char* what) {
  if (v.size() != dim)
    throw OracleError(std::string(what) + " returned a vector of length " + std::to_string(v.size()) +
                      ", expected " + std::to_string(dim));
  if (v.hasNaN()) throw OracleError(std::string(what) + " returned NaN entries");
  return v;
}

inline void require_dim(const Vector& x, Index dim, const char* what) {
  if (x.size() != dim)
    throw DimensionError(std::string(what) + ": point has length " + std::to_string(x.size()) +
                         ", problem dimension is " + std::to_string(dim));
}

/// The smooth part f : R^n -> R.
struct SmoothOracle {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> grad;
  Index dim = 0;
  std::optional<double> lower_bound;

  double value(const Vector& x) const {
    require_dim(x, dim, "f");
    const double v = checked_value(eval(x), "f");
    if (!std::isfinite(v)) throw OracleError("f returned a non-finite value");
    return v;
  }

  Vector gradient(const Vector& x) const {
    require_dim(x, dim, "grad f");
    Vector g = grad(x);
    checked_vector(g, dim, "grad f");
    return g;
  }
};

/// The nonsmooth part g : R^n -> R u {+inf}. `subgrad` returns one element of
/// the limiting subdifferential; which one is the implementation's choice.
struct NonsmoothOracle {
  std::function<double(const Vector&)> eval;
  std::function<Vector(const Vector&)> subgrad;
  std::optional<double> lower_bound;

  double value(const Vector& x) const {
    const double v = checked_value(eval(x), "g");
    if (v == -kInf) throw OracleError("g returned -inf (g must be proper)");
    return v;
  }

  Vector subgradient(const Vector& x) const {
    Vector s = subgrad(x);
    checked_vector(s, x.size(), "subgradient of g");
    return s;
  }
};

/// phi = f + g together with the majorant power p > 1.
class CompositeProblem {
 public:
  CompositeProblem(SmoothOracle f, NonsmoothOracle g, double p, std::optional<double> lp_estimate = std::nullopt)
      : f_(std::move(f)), g_(std::move(g)), p_(p), lp_(lp_estimate) {
    if (!(p_ > 1.0)) throw std::invalid_argument("majorant power p must be > 1, got " + std::to_string(p_));
    if (lp_ && !(*lp_ > 0.0)) throw std::invalid_argument("L_p estimate must be > 0");
    if (f_.dim <= 0) throw std::invalid_argument("problem dimension must be positive");
    if (!f_.eval || !f_.grad || !g_.eval || !g_.subgrad) throw std::invalid_argument("all four oracles are required");
  }

  const SmoothOracle& f() const { return f_; }
  const NonsmoothOracle& g() const { return g_; }
  double p() const { return p_; }
  Index dim() const { return f_.dim; }
  std::optional<double> lp_estimate() const { return lp_; }

  /// Overrides phi evaluation with a direct formula (used when f + g is a
  /// reformulation whose parts cancel large terms).
  void set_objective(std::function<double(const Vector&)> phi) { objective_ = std::move(phi); }

  /// Known lower bound on inf phi. Explicit bound wins, otherwise the sum of the
  /// parts' bounds when both are known.
  void set_lower_bound(double lb) { lower_bound_ = lb; }
  std::optional<double> lower_bound() const {
    if (lower_bound_) return lower_bound_;
    if (f_.lower_bound && g_.lower_bound) return *f_.lower_bound + *g_.lower_bound;
    return std::nullopt;
  }

  double phi(const Vector& x) const {
    require_dim(x, dim(), "phi");
    if (objective_) return checked_value(objective_(x), "phi");
    return ext_add(f_.value(x), g_.value(x));
  }

 private:
  SmoothOracle f_;
  NonsmoothOracle g_;
  double p_;
  std::optional<double> lp_;
  std::optional<double> lower_bound_;
  std::function<double(const Vector&)> objective_;
};

inline void require_power(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("power p must be > 1, got " + std::to_string(p));
}

/// ||x||^p.
inline double power_norm(double p, const Vector& x) {
  require_power(p);
  return std::pow(x.norm(), p);
}

/// Gradient of ||x||^p / p, i.e. ||x||^{p-2} x, with the 0/0 = 0 convention.
inline Vector power_grad(double p, const Vector& x) {
  require_power(p);
  const double n = x.norm();
  if (n == 0.0) return Vector::Zero(x.size());
  return std::pow(n, p - 2.0) * x;
}

/// f(x) and grad f(x) frozen at a base point; every model evaluation at that
/// base point reuses them.
struct Linearization {
  Vector x;
  double fx = 0.0;
  Vector grad;

  Linearization(const CompositeProblem& problem, const Vector& base)
      : x(base), fx(problem.f().value(base)), grad(problem.f().gradient(base)) {}
};

/// l(x, y) = f(x) + <grad f(x), y - x> + g(y).
inline double eval_ell(const CompositeProblem& problem, const Linearization& lin, const Vector& y) {
  require_dim(y, problem.dim(), "eval_ell y");
  const double gy = problem.g().value(y);
  if (gy == kInf) return kInf;
  return lin.fx + lin.grad.dot(y - lin.x) + gy;
}

inline double eval_ell(const CompositeProblem& problem, const Vector& x, const Vector& y) {
  require_dim(x, problem.dim(), "eval_ell x");
  require_dim(y, problem.dim(), "eval_ell y");
  return eval_ell(problem, Linearization(problem, x), y);
}

/// l(x, y) + ||x - y||^p / (p gamma): the quantity whose infimum over y is the
/// high-order forward-backward envelope.
inline double model_value(const CompositeProblem& problem, const Linearization& lin, const Vector& y, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  const double ell = eval_ell(problem, lin, y);
  if (ell == kInf) return kInf;
  const double p = problem.p();
  return ell + power_norm(p, lin.x - y) / (p * gamma);
}

inline double model_value(const CompositeProblem& problem, const Vector& x, const Vector& y, double gamma) {
  require_dim(x, problem.dim(), "model_value x");
  return model_value(problem, Linearization(problem, x), y, gamma);
}

}  // namespace hifba
