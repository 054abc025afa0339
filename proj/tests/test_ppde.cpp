#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pathfk/error.hpp"
#include "pathfk/fixtures.hpp"
#include "pathfk/ppde.hpp"

using namespace pathfk;

namespace {

const RegressionBasis& basis() {
  static const RegressionBasis b = RegressionBasis::standard();
  return b;
}

CadlagPath random_prefix(std::mt19937_64& rng, double horizon) {
  std::normal_distribution<double> g(0.0, 0.7);
  std::vector<double> times;
  std::vector<double> values;
  const std::size_t n = 6;
  for (std::size_t i = 0; i <= n; ++i) {
    times.push_back(horizon * static_cast<double>(i) / n);
    values.push_back(g(rng));
  }
  return CadlagPath::scalar(times, values);
}

}  // namespace

TEST(Ppde, UEvalAtHorizonReturnsTerminal) {
  const auto& fx = find_fixture("integral-sin-c0");
  const auto p = CadlagPath::scalar({0.0, 0.4, 1.0}, {0.1, 0.9, -0.3});
  const auto e = u_eval(fx.problem, p, MonteCarloSpec{}, basis());
  EXPECT_EQ(e.value, fx.problem.terminal(p));
  EXPECT_EQ(e.se, 0.0);
  EXPECT_THROW(u_eval(fx.problem, CadlagPath::constant(0.0, 1.5), MonteCarloSpec{}, basis()),
               DomainError);
}

TEST(Ppde, UEvalMartingale) {
  const auto& fx = find_fixture("martingale-terminal");
  const auto p = CadlagPath::scalar({0.0, 0.3}, {0.2, -0.45});
  const auto e = u_eval(fx.problem, p, MonteCarloSpec{20, 4000, 3, false}, basis());
  EXPECT_LE(std::abs(e.value + 0.45), 3.0 * e.se);
}

TEST(Ppde, UEvalMatchesClosedFormsWithinThreeSe) {
  std::mt19937_64 rng(11);
  for (const char* id : {"integral-x2-c0", "integral-x2-c0.1", "integral-sin-c0", "heat-quadratic",
                         "linear-c0.1-sq", "running-integral"}) {
    const auto& fx = find_fixture(id);
    const auto p = random_prefix(rng, 0.4);
    const auto e = u_eval(fx.problem, p, MonteCarloSpec{40, 10000, 5, false}, basis());
    const double exact = fx.closed_form(p);
    // Explicit Euler on the linear driver adds an O(dt) bias.
    const double bias = std::abs(exact) * 0.1 * 0.1 * (1.0 - 0.4) / 40.0;
    EXPECT_LE(std::abs(e.value - exact), 3.0 * e.se + bias + 1e-12) << id;
  }
}

TEST(Ppde, UFunctionalWrapsEvaluation) {
  const auto& fx = find_fixture("heat-quadratic");
  const MonteCarloSpec mc{10, 500, 2, false};
  const auto u = u_functional(fx.problem, mc, basis());
  const auto p = CadlagPath::constant(0.3, 0.5);
  EXPECT_EQ(u(p), u_eval(fx.problem, p, mc, basis()).value);
}

TEST(Ppde, HeatFixtureResidualIsExactOnQuadratics) {
  const auto& fx = find_fixture("heat-quadratic");
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_prefix(rng, 0.6);
    EXPECT_NEAR(ppde_residual(fx.bundle, fx.problem, p), 0.0, 1e-12);
    const auto fd = finite_difference_supplier(fx.functional, fx.problem.T);
    EXPECT_NEAR(ppde_residual(fd, fx.problem, p), 0.0, 1e-6);
  }
}

TEST(Ppde, AnalyticBundlesSolveThePpde) {
  std::mt19937_64 rng(20);
  for (const auto& fx : fixture_catalog()) {
    if (!fx.bundle || !fx.ppde_solution) continue;
    for (int trial = 0; trial < 20; ++trial) {
      std::uniform_real_distribution<double> u(0.0, 0.95);
      const auto p = random_prefix(rng, u(rng) + 0.01);
      EXPECT_LE(std::abs(ppde_residual(fx.bundle, fx.problem, p)), 1e-3) << fx.id;
    }
  }
}

TEST(Ppde, ItoFixtureIsNotAPpdeSolution) {
  const auto& fx = find_fixture("ito-integral-plus-square");
  EXPECT_FALSE(fx.ppde_solution);
  const auto p = CadlagPath::scalar({0.0, 0.5}, {0.0, 1.0});
  // D_t u + 1/2 D_xx u = x(t) + 1.
  EXPECT_NEAR(ppde_residual(fx.bundle, fx.problem, p), 2.0, 1e-12);
}

TEST(Ppde, NumericResidualWithinBand) {
  const auto& fx = find_fixture("integral-x2-c0");
  const auto p = CadlagPath::scalar({0.0, 0.2, 0.4}, {0.3, -0.1, 0.5});
  const auto r = numeric_ppde_residual(fx.problem, p, MonteCarloSpec{20, 4000, 17, false}, basis(),
                                       0.05, 0.05);
  EXPECT_GT(r.band, 0.0);
  EXPECT_LE(std::abs(r.residual), 3.0 * r.band);
  const auto exact = fx.bundle(p);
  EXPECT_NEAR(r.bundle.vertical[0], exact.vertical[0], 0.1);
  EXPECT_THROW(numeric_ppde_residual(fx.problem, p, MonteCarloSpec{}, basis(), 0.05, 0.7),
               DomainError);
}

TEST(Ppde, ZConsistencyMartingale) {
  const auto& fx = find_fixture("martingale-terminal");
  const auto p = CadlagPath::constant(0.7, 0.0);
  const auto rep = z_consistency(fx.problem, p, MonteCarloSpec{20, 10000, 1, false}, basis(),
                                 {0.2, 0.5, 0.8});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_FALSE(rep.partial);
  for (const auto& row : rep.rows) {
    EXPECT_LE(row.relative_error, 0.05) << row.time;
    EXPECT_NEAR(row.z_derivative, 1.0, 1e-9);
    EXPECT_LE(std::abs(row.z_regression - 1.0), 3.0 * row.se) << row.time;
    EXPECT_EQ(row.paths, 16u);
  }
}

TEST(Ppde, ZConsistencyRunningIntegral) {
  // Phi = int x ds, f = 0: D_x u(s) = T - s. The left-point scheme's Z over
  // [t_k, t_{k+1}) is T - t_{k+1}.
  const auto& fx = find_fixture("running-integral");
  const auto p = CadlagPath::constant(0.0, 0.0);
  const std::size_t steps = 20;
  const double dt = 1.0 / steps;
  const auto rep = z_consistency(fx.problem, p, MonteCarloSpec{steps, 2500, 2, false}, basis(),
                                 {0.1, 0.5, 0.75});
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& row : rep.rows) {
    EXPECT_NEAR(row.z_derivative, 1.0 - row.time, 1e-6);
    EXPECT_LE(std::abs(row.z_regression - (1.0 - row.time - dt)), 3.0 * row.se) << row.time;
  }
}

TEST(Ppde, ZConsistencyBudgetFlagsPartialReport) {
  const auto& fx = find_fixture("martingale-terminal");
  ZConsistencyOptions opt;
  opt.max_inner_solves = 10;
  const auto rep = z_consistency(fx.problem, CadlagPath::constant(0.0, 0.0),
                                 MonteCarloSpec{10, 400, 1, false}, basis(), {0.2, 0.5}, opt);
  EXPECT_TRUE(rep.partial);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].paths, 5u);
}

TEST(Ppde, FreezeLeavesTerminalOnlyProblemsUnchanged) {
  const MonteCarloSpec mc{16, 2000, 9, false};
  for (const char* id : {"heat-quadratic", "martingale-terminal", "linear-c0.1-sq"}) {
    const auto& fx = find_fixture(id);
    const auto p = CadlagPath::scalar({0.0, 0.25}, {0.1, 0.6});
    const auto u = u_eval(fx.problem, p, mc, basis());
    for (std::size_t n : {1u, 2u, 4u, 8u}) {
      const auto un = frozen_u(fx.problem, p, n, mc, basis());
      EXPECT_EQ(un.value, u.value) << id << " n=" << n;
      EXPECT_EQ(un.se, u.se);
    }
  }
}

TEST(Ppde, FreezeOneStepHandValue) {
  // n = 1, Phi = int x^2, t = 0, x = 0: Phi^1 = T B(T)^2, so u^1 = T^2.
  const auto& fx = find_fixture("integral-x2-c0");
  const auto p = CadlagPath::constant(0.0, 0.0);
  const auto u1 = frozen_u(fx.problem, p, 1, MonteCarloSpec{8, 20000, 4, false}, basis());
  EXPECT_LE(std::abs(u1.value - 1.0), 3.0 * u1.se);
}

TEST(Ppde, FreezeConvergesOnIntegralFixture) {
  const auto& fx = find_fixture("integral-x2-c0");
  const auto p = CadlagPath::constant(0.0, 0.0);
  const MonteCarloSpec mc{64, 4000, 6, false};
  const auto base = u_solution(fx.problem, p, mc, basis());
  double previous = std::numeric_limits<double>::infinity();
  double first = 0.0;
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    const auto sn = frozen_solution(fx.problem, p, n, mc, basis());
    const auto d = paired_difference(sn, base);
    EXPECT_LE(std::abs(d.value), previous + d.se) << n;
    previous = std::abs(d.value);
    if (n == 1) first = previous;
  }
  EXPECT_LE(previous, first / 2.0);
}

TEST(Ppde, FrozenProblemNamesAndValidation) {
  const auto& fx = find_fixture("integral-x2-c0");
  const auto fp = frozen_problem(fx.problem, 0.0, 4);
  EXPECT_NE(fp.terminal.name.find("freeze4"), std::string::npos);
  EXPECT_THROW(frozen_problem(fx.problem, 0.0, 0), DomainError);
}
