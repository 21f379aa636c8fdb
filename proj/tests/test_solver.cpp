#include "hifba/solver.hpp"
#include "hifba/problems/toy.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hifba;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

CompositeProblem quadratic_zero_g() {
  return CompositeProblem(smooth_1d([](double x) { return 0.5 * x * x; }, [](double x) { return x; }, 0.0),
                          nonsmooth_1d([](double) { return 0.0; }, [](double) { return 0.0; }, 0.0), 2.0, 1.0);
}

// Exact HiFBS for f = x^2/2, g = 0, p = 2: y = (1 - gamma) x.
HifbsOracle exact_quadratic(const CompositeProblem& p) {
  return [&p](const Vector& x, double gamma, double eps) {
    const Linearization lin(p, x);
    return make_solution(p, lin, (1.0 - gamma) * x, gamma, eps, 1);
  };
}

SolverConfig plain_config(double gamma, double sigma) {
  SolverConfig c;
  c.gamma = gamma;
  c.sigma = sigma;
  c.structural = Structural::A;
  c.direction = Direction::none;
  return c;
}

IterationRecord accepted_record(std::size_t k, double env, double env_next, double rhs, double r, double eps,
                                double eps_next) {
  IterationRecord rec;
  rec.k = k;
  rec.envelope_inexact = env;
  rec.envelope_next = env_next;
  rec.acceptance_rhs = rhs;
  rec.residual_norm = r;
  rec.epsilon_k = eps;
  rec.gamma_k = 1.0;
  rec.sigma_k = 1.0;
  rec.alpha = 1.0;
  rec.accepted = true;
  (void)eps_next;
  return rec;
}

}  // namespace

TEST(EpsilonSchedule, InverseSquareValuesAndTotal) {
  const auto e = EpsilonSchedule::inverse_square();
  EXPECT_DOUBLE_EQ(e(0), 1.0);
  EXPECT_DOUBLE_EQ(e(1), 0.25);
  EXPECT_DOUBLE_EQ(e(9), 0.01);
  double partial = 0.0;
  for (std::size_t k = 0; k < 1000000; ++k) {
    if (k > 0) {
      ASSERT_LE(e(k), e(k - 1));
    }
    partial += e(k);
  }
  EXPECT_LT(partial, e.total());
  EXPECT_NEAR(partial, e.total(), 1.1e-6);
  EXPECT_THROW(EpsilonSchedule::inverse_square(0.0), std::invalid_argument);
}

TEST(EpsilonSchedule, Geometric) {
  const auto e = EpsilonSchedule::geometric(0.5, 0.5);
  EXPECT_DOUBLE_EQ(e(0), 0.5);
  EXPECT_DOUBLE_EQ(e(3), 0.0625);
  EXPECT_DOUBLE_EQ(e.total(), 1.0);
  EXPECT_THROW(EpsilonSchedule::geometric(1.0, 1.0), std::invalid_argument);
}

TEST(SolverConfig, ValidatesStepConditions) {
  auto p = quadratic_zero_g();
  EXPECT_NO_THROW(plain_config(0.5, 0.4).validate(p));
  EXPECT_THROW(plain_config(1.0, 0.1).validate(p), std::invalid_argument);
  // (1 - 0.5) / (2 * 0.5) = 0.5
  EXPECT_THROW(plain_config(0.5, 0.5).validate(p), std::invalid_argument);
  auto c = plain_config(0.5, 0.4);
  c.vartheta = 1.0;
  EXPECT_THROW(c.validate(p), std::invalid_argument);
  auto adaptive = plain_config(50.0, 50.0);
  adaptive.adaptive_lp = true;
  EXPECT_NO_THROW(adaptive.validate(p));
}

TEST(Spectral, InRangeQuotient) {
  SpectralState st;
  const auto r = spectral_direction(st, v2(1, 0), v2(0, 0), v2(1, 0), v2(-1, 0));
  EXPECT_DOUBLE_EQ(r.omega, 0.5);
  EXPECT_DOUBLE_EQ(r.d[0], -0.5);
  EXPECT_DOUBLE_EQ(r.d[1], 0.0);
}

TEST(Spectral, FallbackBranches) {
  SpectralState st;
  // <s, y> = 0 is out of range.
  EXPECT_DOUBLE_EQ(spectral_direction(st, v2(1, 0), v2(0, 0), v2(0, 2), v2(0, 0)).omega, 1.0);
  EXPECT_DOUBLE_EQ(spectral_direction(st, v2(1, 0), v2(0, 0), v2(0, 0.01), v2(0, 0)).omega, 100.0);
  EXPECT_DOUBLE_EQ(spectral_direction(st, v2(1, 0), v2(0, 0), v2(0, 1e-6), v2(0, 0)).omega, 1e5);
  // quotient 1e-3 below omega_min, ||r|| = 0.5
  const auto r = spectral_direction(st, v2(1e-3, 0), v2(0, 0), v2(0.5, 0), v2(-0.5, 0));
  EXPECT_DOUBLE_EQ(r.omega, 2.0);
  EXPECT_DOUBLE_EQ(spectral_direction(st, v2(0, 3)).omega, 1.0);
}

TEST(Spectral, OmegaAlwaysInRange) {
  Rng rng(31);
  SpectralState st;
  for (int i = 0; i < 5000; ++i) {
    const double scale = std::pow(10.0, rng.uniform(-8, 4));
    Vector xc(3), xp(3), rc(3), rp(3);
    for (int j = 0; j < 3; ++j) {
      xc[j] = rng.normal() * scale;
      xp[j] = rng.normal() * scale;
      rc[j] = rng.normal() * std::pow(10.0, rng.uniform(-8, 2));
      rp[j] = rng.normal();
    }
    const double w = spectral_direction(st, xc, xp, rc, rp).omega;
    ASSERT_GE(w, 0.1);
    ASSERT_LE(w, 1e10);
  }
}

TEST(Structural, Examples) {
  const Vector x = v2(1, 2), y = v2(0, 1), d = v2(-0.5, 0.25);
  EXPECT_LT((structural_iterate(Structural::C, 1e-12, x, y, d) - y).norm(), 1e-9);
  EXPECT_LT((structural_iterate(Structural::C, 1.0, x, y, d) - (x + d)).norm(), 1e-15);
  EXPECT_EQ(structural_iterate(Structural::A, 0.3, x, y, d), y);
  EXPECT_THROW(structural_iterate(Structural::C, 0.0, x, y, d), std::invalid_argument);
  EXPECT_THROW(structural_iterate(Structural::C, 1.5, x, y, d), std::invalid_argument);
}

TEST(Structural, ContractBound) {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    Vector x(4), y(4), d(4);
    for (int j = 0; j < 4; ++j) {
      x[j] = rng.normal();
      y[j] = rng.normal();
      d[j] = rng.normal();
    }
    const double alpha = 1.0 - rng.uniform();
    const Vector z = structural_iterate(Structural::C, alpha, x, y, d);
    ASSERT_LE((z - x).norm(), (x - y).norm() + d.norm() + 1e-12);
  }
}

TEST(BoostedStep, FixedPointAcceptedImmediately) {
  auto p = quadratic_zero_g();
  auto inner = exact_quadratic(p);
  IterateState st;
  st.x = v1(0.0);
  st.gamma = 0.5;
  st.sigma = 0.4;
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.sigma = 0.4;
  st.solution = inner(st.x, st.gamma, cfg.epsilon(0));
  const auto out = boosted_step(p, inner, st, cfg);
  EXPECT_TRUE(out.record.accepted);
  EXPECT_EQ(out.record.backtracks, 0u);
  EXPECT_LE(out.record.envelope_next, st.solution.envelope_value + cfg.epsilon(0) + cfg.epsilon(1));
}

TEST(BoostedStep, ZeroDirectionBacktracksBetweenPointAndForwardBackward) {
  auto p = quadratic_zero_g();
  auto inner = exact_quadratic(p);
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.sigma = 0.4;
  cfg.direction = Direction::none;
  cfg.epsilon = EpsilonSchedule::geometric(1e-12, 0.5);
  IterateState st;
  st.x = v1(3.0);
  st.gamma = 0.5;
  st.sigma = 0.4;
  st.solution = inner(st.x, st.gamma, cfg.epsilon(0));
  // F(x) = (1 - gamma) x^2 / 2
  EXPECT_NEAR(st.solution.envelope_value, 0.5 * 9.0 / 2.0, 1e-14);
  const auto out = boosted_step(p, inner, st, cfg);
  // rhs = 2.25 - 0.4 * 2.25 = 1.35; candidates (1 - a) 1.5 + 3 a for a = 0.72^m:
  // m = 0 gives F = 2.25, m = 1 gives F(2.58) = 1.6641, m = 2 gives F(2.2776) = 1.2969.
  EXPECT_TRUE(out.record.accepted);
  EXPECT_EQ(out.record.backtracks, 2u);
  const double a = 0.72 * 0.72;
  const double xn = (1.0 - a) * 1.5 + a * 3.0;
  EXPECT_NEAR(out.x_next[0], xn, 1e-14);
  EXPECT_NEAR(out.record.envelope_next, 0.25 * xn * xn, 1e-13);
  EXPECT_LE(out.record.envelope_next, out.record.acceptance_rhs);
}

TEST(BoostedStep, FirstSpectralStepLandsOnForwardBackwardPoint) {
  auto p = quadratic_zero_g();
  auto inner = exact_quadratic(p);
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.sigma = 0.4;
  IterateState st;
  st.x = v1(3.0);
  st.gamma = 0.5;
  st.sigma = 0.4;
  st.solution = inner(st.x, st.gamma, cfg.epsilon(0));
  // omega = 1 without history, so x + d = y_bar and every alpha gives y_bar.
  const auto out = boosted_step(p, inner, st, cfg);
  EXPECT_TRUE(out.record.accepted);
  EXPECT_NEAR(out.x_next[0], 1.5, 1e-14);
  EXPECT_NEAR(out.record.envelope_next, 0.25 * 2.25, 1e-14);
}

TEST(BoostedStep, FallbackWhenNothingIsAccepted) {
  auto p = quadratic_zero_g();
  int calls = 0;
  // Reports an envelope far above any acceptance bound for every candidate.
  HifbsOracle liar = [&](const Vector& x, double gamma, double eps) {
    ++calls;
    HifbsSolution s = make_solution(p, Linearization(p, x), (1.0 - gamma) * x, gamma, eps, 1);
    if (calls > 1) s.envelope_value = 1e6;
    return s;
  };
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.sigma = 0.4;
  cfg.max_backtracks = 5;
  IterateState st;
  st.x = v1(3.0);
  st.gamma = 0.5;
  st.sigma = 0.4;
  st.solution = liar(st.x, st.gamma, cfg.epsilon(0));
  const auto out = boosted_step(p, liar, st, cfg);
  EXPECT_TRUE(out.record.fallback);
  EXPECT_FALSE(out.record.accepted);
  EXPECT_EQ(out.record.backtracks, 6u);
  EXPECT_EQ(out.x_next, st.solution.y_bar);
  EXPECT_EQ(calls, 1 + 6 + 1);
}

TEST(Run, PlainHifbaHalvesEachStep) {
  auto p = quadratic_zero_g();
  auto cfg = plain_config(0.5, 0.4);
  cfg.stop_residual_tol = 1e-6;
  const auto trace = run(p, exact_quadratic(p), v1(4.0), cfg, [](IterationRecord& r, const Vector& x) {
    r.snr_db = x[0];
  });
  ASSERT_GT(trace.records.size(), 10u);
  for (const auto& r : trace.records) {
    const double expected = 4.0 * std::pow(0.5, static_cast<double>(r.k));
    EXPECT_NEAR(r.snr_db, expected, 1e-14 * 4.0);
    EXPECT_NEAR(r.residual_norm, expected / 2.0, 1e-14 * 4.0);
  }
  EXPECT_EQ(trace.status, Status::converged);
  EXPECT_LT(trace.records.back().residual_norm, 1e-6);
  EXPECT_TRUE(trace.records.back().terminal());
  EXPECT_TRUE(monitors_ok(trace.monitors));
  EXPECT_GT(trace.monitors.summability_checks, 0u);
}

TEST(Run, OptimalStartStopsAtZero) {
  auto p = quadratic_zero_g();
  const auto trace = run(p, exact_quadratic(p), v1(0.0), plain_config(0.5, 0.4));
  ASSERT_EQ(trace.records.size(), 1u);
  EXPECT_EQ(trace.records[0].k, 0u);
  EXPECT_EQ(trace.records[0].residual_norm, 0.0);
  EXPECT_EQ(trace.status, Status::converged);
}

TEST(Run, CounterexampleInstanceWithGridInner) {
  const CompositeProblem p(smooth_1d([](double x) { return 0.5 * x * x; }, [](double x) { return x; }),
                           nonsmooth_1d([](double x) { return x * x; }, [](double x) { return 2.0 * x; }, 0.0), 3.0);
  SolverConfig cfg;
  cfg.gamma = 2.0;
  cfg.sigma = 0.1;
  cfg.max_outer = 50;
  cfg.stop_residual_tol = 1e-4;
  const auto trace = run(p, make_grid_oracle(p, 2.0, 40001), v1(1.0), cfg);
  EXPECT_EQ(trace.status, Status::converged);
  EXPECT_LT(trace.records.back().residual_norm, 1e-4);
  EXPECT_LE(trace.records.size(), 51u);
  EXPECT_TRUE(monitors_ok(trace.monitors));
}

TEST(Run, ToyProblemsSatisfyMonitors) {
  for (const auto& toy : toy_problems()) {
    SolverConfig cfg;
    cfg.gamma = toy.lp > 0.5 ? 0.5 / toy.lp : 1.0;
    cfg.sigma = 0.9 * (1.0 - cfg.gamma * toy.lp) / (toy.problem.p() * cfg.gamma);
    cfg.max_outer = 60;
    const double x0 = toy.box.hi[0] - 1.5;
    const auto trace = run(toy.problem, make_grid_oracle(toy.problem, 3.0, 6001), v1(x0), cfg);
    EXPECT_TRUE(monitors_ok(trace.monitors)) << toy.name;
    EXPECT_LE(trace.phi_best, toy.problem.phi(v1(x0))) << toy.name;
    const auto offline = verify_trace(trace, cfg.epsilon, toy.problem.lower_bound());
    EXPECT_TRUE(monitors_ok(offline)) << toy.name;
    EXPECT_EQ(offline.accepted_steps, trace.monitors.accepted_steps) << toy.name;
  }
}

TEST(Run, BoostedReachesMinimumOfAbsQuadratic) {
  const auto toy = toy_abs_quadratic();
  SolverConfig cfg;
  cfg.gamma = 0.5;
  cfg.sigma = 0.4;
  cfg.max_outer = 200;
  const auto trace = run(toy.problem, make_grid_oracle(toy.problem, 3.0, 6001), v1(2.5), cfg);
  // Off-grid iterates come from the spectral steps only; the grid spacing bounds the gap.
  EXPECT_NEAR(trace.phi_best, toy.phi_min, 1e-3);
}

TEST(Run, BudgetsAndMaxOuter) {
  auto p = quadratic_zero_g();
  auto cfg = plain_config(0.5, 0.4);
  cfg.time_budget = 0.0;
  auto t = run(p, exact_quadratic(p), v1(4.0), cfg);
  EXPECT_EQ(t.status, Status::budget);
  EXPECT_EQ(t.records.size(), 1u);
  cfg.time_budget = kInf;
  cfg.max_outer = 3;
  t = run(p, exact_quadratic(p), v1(4.0), cfg);
  EXPECT_EQ(t.status, Status::max_outer);
  EXPECT_EQ(t.records.size(), 4u);
  EXPECT_EQ(t.records.back().alpha, 0.0);
}

TEST(Run, OracleFailureAbortsWithPartialTrace) {
  auto p = quadratic_zero_g();
  int calls = 0;
  HifbsOracle flaky = [&](const Vector& x, double gamma, double eps) {
    if (++calls == 4) throw OracleError("inner solver exploded");
    return make_solution(p, Linearization(p, x), (1.0 - gamma) * x, gamma, eps, 1);
  };
  try {
    run(p, flaky, v1(4.0), plain_config(0.5, 0.4));
    FAIL() << "expected SolverAbort";
  } catch (const SolverAbort& e) {
    // Calls: x0, then one per step; the fourth fails inside step k = 2.
    EXPECT_EQ(e.trace.records.size(), 2u);
    EXPECT_NE(std::string(e.what()).find("exploded"), std::string::npos);
  }
}

TEST(Run, RejectsBadStart) {
  auto p = quadratic_zero_g();
  EXPECT_THROW(run(p, exact_quadratic(p), Vector::Zero(2), plain_config(0.5, 0.4)), DimensionError);
  EXPECT_THROW(run(p, exact_quadratic(p), v1(kInf), plain_config(0.5, 0.4)), std::invalid_argument);
}

TEST(Run, AdaptiveStepTracksLocalConstant) {
  const auto toy = toy_cosine();
  SolverConfig cfg;
  cfg.adaptive_lp = true;
  cfg.max_outer = 40;
  cfg.stop_residual_tol = 0.0;
  const auto trace = run(toy.problem, make_grid_oracle(toy.problem, 4.0, 8001), v1(1.0), cfg);
  bool changed = false;
  for (const auto& r : trace.records) {
    changed = changed || r.gamma_k != 1.0;
    // gamma = 0.99 / L and sigma = 0.99 (1 - gamma L) / (2 gamma) = 0.99 * 0.01 / (2 gamma)
    if (r.k > 0 && r.gamma_k != 1.0) {
      EXPECT_NEAR(r.sigma_k, 0.99 * 0.01 / (2.0 * r.gamma_k), 1e-12);
    }
  }
  EXPECT_TRUE(changed);
  EXPECT_EQ(trace.monitors.summability_checks, 0u);
  EXPECT_EQ(trace.metadata.at("adaptive_lp"), "true");
}

TEST(InvariantMonitor, DetectsAcceptanceAndLyapunovBreaches) {
  InvariantMonitor m(2.0, 2.0, 0.0, true);
  m.feed(accepted_record(0, 10.0, 9.0, 8.0, 1.0, 0.1, 0.05));
  m.feed(accepted_record(1, 9.0, 8.0, 9.0, 1.0, 0.05, 0.01));
  m.finish();
  EXPECT_NEAR(m.report().acceptance_max_violation, 1.0 / 8.0, 1e-15);
  EXPECT_FALSE(monitors_ok(m.report()));

  InvariantMonitor ly(2.0, 2.0, 0.0, false);
  // F_1 = 11 > F_0 + eps_0 + eps_1 = 10.15
  ly.feed(accepted_record(0, 10.0, 9.0, 9.5, 1.0, 0.1, 0.05));
  ly.feed(accepted_record(1, 11.0, 10.0, 10.5, 1.0, 0.05, 0.01));
  ly.finish();
  EXPECT_NEAR(ly.report().lyapunov_max_violation, (11.0 - 10.15) / 10.15, 1e-12);
}

TEST(InvariantMonitor, DetectsSummabilityBreach) {
  InvariantMonitor m(2.0, 0.0, 0.0, true);
  // bound (F_0 - 0 + 0) / sigma = 1; residual_sum = 4
  m.feed(accepted_record(0, 1.0, 0.5, 1.0, 2.0, 0.0, 0.0));
  m.finish();
  EXPECT_NEAR(m.report().summability_max_violation, 3.0, 1e-15);
  EXPECT_EQ(m.report().summability_checks, 1u);
}

TEST(InvariantMonitor, FallbackStepsAreCountedNotChecked) {
  InvariantMonitor m(2.0, 1.0, 0.0, true);
  IterationRecord r = accepted_record(0, 1.0, 50.0, 0.0, 1.0, 0.1, 0.1);
  r.accepted = false;
  r.fallback = true;
  m.feed(r);
  m.finish();
  EXPECT_TRUE(monitors_ok(m.report()));
  EXPECT_EQ(m.report().fallback_steps, 1u);
  EXPECT_EQ(m.report().accepted_steps, 0u);
}
