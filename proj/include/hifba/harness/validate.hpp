// Property suites behind the `validate` subcommand: majorant and
// paraconcavity checks on closed-form functions, the envelope sandwich on the
// one-dimensional toy problems, and the forward-backward vs shifted-prox
// contrast for p = 3.
#pragma once

#include "hifba/harness/config.hpp"
#include "hifba/harness/io.hpp"
#include "hifba/hifbs.hpp"
#include "hifba/majorant.hpp"
#include "hifba/problems/toy.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace hifba::harness {

using nlohmann::json;

namespace detail {

inline json vec_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json majorant_entry(const std::string& suite, const std::string& name, const MajorantReport& r,
                           bool expect_pass) {
  json j{{"suite", suite},
         {"name", name},
         {"expected", expect_pass ? "pass" : "fail"},
         {"observed", r.holds ? "pass" : "fail"},
         {"ok", r.holds == expect_pass},
         {"worst_violation", r.worst_violation},
         {"samples", r.samples_checked}};
  if (!r.holds || !expect_pass) j["witness"] = {{"x", vec_json(r.worst_pair.first)}, {"y", vec_json(r.worst_pair.second)}};
  if (!std::isnan(r.worst_lambda)) j["worst_lambda"] = r.worst_lambda;
  return j;
}

}  // namespace detail

inline json majorant_suite(std::size_t samples, std::uint64_t seed) {
  json out = json::array();
  const auto half_square = smooth_1d([](double x) { return 0.5 * x * x; }, [](double x) { return x; });
  const auto neg_square = smooth_1d([](double x) { return -x * x; }, [](double x) { return -2.0 * x; });
  const auto quartic = smooth_1d([](double x) { return x * x * x * x; }, [](double x) { return 4.0 * x * x * x; });

  out.push_back(detail::majorant_entry("majorant", "half_square p=2 L=1",
                                       check_majorant(half_square, 2.0, 1.0, BoxPairSampler(-10, 10, 1, seed), samples,
                                                      1e-12),
                                       true));
  for (double p : {1.5, 2.0, 3.0})
    for (double lp : {1e-6, 1.0})
      out.push_back(detail::majorant_entry(
          "majorant", "neg_square p=" + format_double(p) + " L=" + format_double(lp),
          check_majorant(neg_square, p, lp, BoxPairSampler(-10, 10, 1, seed + 1), samples), true));
  out.push_back(detail::majorant_entry(
      "majorant", "quartic p=2 L=1", check_majorant(quartic, 2.0, 1.0, BoxPairSampler(-10, 10, 1, seed + 2), samples), false));
  out.push_back(detail::majorant_entry(
      "majorant", "half_square p=2 L=0.5 (too small)",
      check_majorant(half_square, 2.0, 0.5, BoxPairSampler(-10, 10, 1, seed + 3), samples), false));

  // lambda f(x) + (1-lambda) f(y) - f(mid) = lambda (1-lambda) |x-y|^2 / 2 for f = x^2/2; peak 1/8.
  out.push_back(detail::majorant_entry(
      "paraconcavity", "paraconcave half_square c=1/8",
      check_paraconcavity(half_square, 2.0, 0.125, BoxPairSampler(-10, 10, 1, seed + 4), samples, 1e-9, seed), true));
  out.push_back(detail::majorant_entry(
      "paraconcavity", "paraconcave half_square c=0.1 (too small)",
      check_paraconcavity(half_square, 2.0, 0.1, BoxPairSampler(-10, 10, 1, seed + 5), samples, 1e-9, seed), false));
  out.push_back(detail::majorant_entry(
      "paraconcavity", "paraconcave neg_square c=1e-6",
      check_paraconcavity(neg_square, 2.0, 1e-6, BoxPairSampler(-10, 10, 1, seed + 6), samples, 1e-9, seed), true));
  return out;
}

struct SandwichResult {
  double upper_violation = -kInf;   // max F_gamma(x) - phi(x)
  double lower_violation = -kInf;   // max phi(y_bar) - F_gamma(x)
  double monotone_violation = -kInf;  // max F_mu(x) - F_gamma(x), mu > gamma
  double min_gap = kNaN;            // |min of F_gamma over the sampled grid - inf phi|
  std::size_t points = 0;
};

/// Envelope sandwich on one toy problem: x sampled on a uniform grid over
/// `x_lo..x_hi`, F from the grid oracle with the toy problem's box.
inline SandwichResult envelope_sandwich(const ToyProblem& toy, double gamma, double mu, double x_lo, double x_hi,
                                        std::size_t n_points, std::size_t resolution) {
  SandwichResult r;
  double min_env = kInf;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double t = x_lo + (x_hi - x_lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    const Vector x = Vector::Constant(1, t);
    const double phi_x = toy.problem.phi(x);
    const HifbsSolution s = solve_hifbs_grid(toy.problem, x, gamma, toy.box, resolution);
    const HifbsSolution s_mu = solve_hifbs_grid(toy.problem, x, mu, toy.box, resolution);
    if (std::isfinite(phi_x)) r.upper_violation = std::max(r.upper_violation, s.envelope_value - phi_x);
    r.lower_violation = std::max(r.lower_violation, toy.problem.phi(s.y_bar) - s.envelope_value);
    r.monotone_violation = std::max(r.monotone_violation, s_mu.envelope_value - s.envelope_value);
    min_env = std::min(min_env, s.envelope_value);
    ++r.points;
  }
  r.min_gap = std::abs(min_env - toy.phi_min);
  return r;
}

inline json envelope_suite(std::size_t points) {
  json out = json::array();
  for (const ToyProblem& toy : toy_problems()) {
    const double gamma = 0.5 / toy.lp > 1.0 ? 1.0 : 0.5 / toy.lp;
    const double mu = 0.9 / toy.lp > 2.0 * gamma ? 2.0 * gamma : 0.9 / toy.lp;
    const SandwichResult r = envelope_sandwich(toy, gamma, mu, toy.box.lo[0] + 1.0, toy.box.hi[0] - 1.0,
                                               std::max<std::size_t>(points / 2, 1001), 4001);
    const bool ok = r.upper_violation <= 0.0 && r.lower_violation <= 1e-6 && r.monotone_violation <= 2e-6 &&
                    r.min_gap <= 1e-4;
    out.push_back({{"suite", "envelope"},
                   {"name", toy.name},
                   {"gamma", gamma},
                   {"mu", mu},
                   {"expected", "pass"},
                   {"observed", ok ? "pass" : "fail"},
                   {"ok", ok},
                   {"upper_violation", r.upper_violation},
                   {"lower_violation", r.lower_violation},
                   {"monotone_violation", r.monotone_violation},
                   {"min_gap", r.min_gap},
                   {"points", r.points}});
  }
  return out;
}

/// f = x^2/2, g = x^2, p = 3, gamma = 2, x = 1: the forward-backward minimizer
/// 3 - sqrt(10) differs from the p-prox of g at the forward point, -3 + 2 sqrt(2).
inline json counterexample_suite() {
  const CompositeProblem problem(
      smooth_1d([](double x) { return 0.5 * x * x; }, [](double x) { return x; }),
      nonsmooth_1d([](double x) { return x * x; }, [](double x) { return 2.0 * x; }), 3.0);
  const Vector x = Vector::Constant(1, 1.0);
  const double gamma = 2.0;
  const GridBox box{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};
  const std::size_t res = 20001;  // spacing 1e-4
  const double fb = solve_hifbs_grid(problem, x, gamma, box, res).y_bar[0];
  const Vector z = x - gamma * problem.f().gradient(x);
  const double prox = solve_hope_grid(problem.g(), z, gamma, 3.0, box, res)[0];
  const double fb_ref = 3.0 - std::sqrt(10.0);
  const double prox_ref = -3.0 + 2.0 * std::sqrt(2.0);
  const bool ok = std::abs(fb - fb_ref) <= 1e-4 && std::abs(prox - prox_ref) <= 1e-4 && std::abs(fb - prox) > 1e-3;
  return json::array({{{"suite", "forward_backward_vs_prox"},
                       {"name", "p=3 gamma=2 x=1"},
                       {"expected", "pass"},
                       {"observed", ok ? "pass" : "fail"},
                       {"ok", ok},
                       {"forward_backward_minimizer", fb},
                       {"shifted_prox_minimizer", prox},
                       {"gap", std::abs(fb - prox)}}});
}

inline json run_validate(const ValidateConfig& cfg) {
  const std::uint64_t seed = cfg.common.seeds.empty() ? 1 : cfg.common.seeds.front();
  json checks = json::array();
  for (auto& c : majorant_suite(cfg.samples, seed)) checks.push_back(c);
  for (auto& c : envelope_suite(cfg.samples)) checks.push_back(c);
  for (auto& c : counterexample_suite()) checks.push_back(c);
  bool all = true;
  for (const auto& c : checks) all = all && c["ok"].get<bool>();
  return {{"tool", "hifba"}, {"version", kVersion}, {"seed", seed}, {"samples", cfg.samples}, {"all_ok", all},
          {"checks", checks}};
}

}  // namespace hifba::harness
