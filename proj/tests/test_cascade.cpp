#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pathfk/cascade.hpp"
#include "pathfk/error.hpp"
#include "pathfk/fixtures.hpp"
#include "pathfk/ppde.hpp"

using namespace pathfk;

namespace {

CascadeSpec x2_spec() {
  CascadeSpec s;
  s.terminal = [](double x, double) { return x * x; };
  return s;
}

CascadeSpec y2_spec() {
  CascadeSpec s;
  s.terminal = [](double, double y) { return y * y; };
  return s;
}

}  // namespace

TEST(Cascade, TridiagonalSolve) {
  const std::vector<double> a{0.0, 1.0, 1.0, 1.0};
  const std::vector<double> b{4.0, 4.0, 4.0, 4.0};
  const std::vector<double> c{1.0, 1.0, 1.0, 0.0};
  const std::vector<double> x{1.0, -2.0, 0.5, 3.0};
  std::vector<double> r(4);
  for (int i = 0; i < 4; ++i)
    r[i] = (i > 0 ? a[i] * x[i - 1] : 0.0) + b[i] * x[i] + (i < 3 ? c[i] * x[i + 1] : 0.0);
  solve_tridiagonal(a, b, c, r);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r[i], x[i], 1e-14);

  std::vector<double> z{1.0};
  EXPECT_THROW(solve_tridiagonal({0.0}, {0.0}, {0.0}, z), SolverError);
}

TEST(Cascade, SquareInFirstArgument) {
  const auto spec = x2_spec();
  for (double x : {0.0, 0.7, -1.2}) {
    for (double t : {0.0, 0.2, 0.5}) {
      const auto p = t > 0 ? CadlagPath::scalar({0.0, t}, {0.0, x}) : CadlagPath::constant(x, 0.0);
      const auto r = cascade_solve(spec, p);
      const double exact = x * x + (spec.t_bar - t);
      EXPECT_NEAR(r.value, exact, 0.005 * std::max(exact, 1e-2)) << "x=" << x << " t=" << t;
    }
  }
}

TEST(Cascade, StageTwoHasNoEffectWithoutYDependence) {
  const auto r = cascade_solve(x2_spec(), CadlagPath::constant(0.4, 0.0));
  const auto& v2 = r.v2;
  const std::size_t ny = v2.y.size();
  // The level at t_bar equals the terminal data.
  const auto& last = v2.v.back();
  for (std::size_t i = 0; i < v2.x.size(); i += 17)
    for (std::size_t j = 0; j < ny; j += 13)
      EXPECT_NEAR(last[i * ny + j], v2.x[i] * v2.x[i], 1e-12);
  EXPECT_NEAR(v2.times.back(), 0.5, 1e-12);
  EXPECT_NEAR(r.v1.times.back(), 0.0, 1e-12);
}

TEST(Cascade, SquareInSecondArgument) {
  const auto spec = y2_spec();
  const auto r = cascade_solve(spec, CadlagPath::constant(0.3, 0.0));
  EXPECT_NEAR(r.value, 0.5, 0.005 * 0.5);
  // v1 is flat at T - t_bar in the interior.
  const std::size_t mid = r.v1.x.size() / 2;
  for (std::size_t i = mid - 60; i <= mid + 60; i += 20)
    EXPECT_NEAR(r.v1.v.back()[i], 0.5, 0.005);
}

TEST(Cascade, AfterSplitUsesStageTwoOnly) {
  const auto spec = y2_spec();
  const auto p = CadlagPath::scalar({0.0, 0.5, 0.7}, {0.1, 0.3, 0.9});
  const auto r = cascade_solve(spec, p);
  EXPECT_TRUE(r.v1.x.empty());
  const double y = 0.9 - 0.3;
  EXPECT_NEAR(r.value, y * y + (1.0 - 0.7), 0.005 * (y * y + 0.3));
}

TEST(Cascade, MatchesClosedFormFixtures) {
  for (const char* id : {"cascade-x2", "cascade-y2"}) {
    const auto& fx = find_fixture(id);
    ASSERT_TRUE(fx.cascade.has_value());
    for (const auto& p : {CadlagPath::constant(0.5, 0.0), CadlagPath::scalar({0.0, 0.25}, {0.0, -0.8}),
                          CadlagPath::scalar({0.0, 0.5, 0.8}, {0.0, 0.4, 1.0})}) {
      const double exact = fx.closed_form(p);
      EXPECT_NEAR(cascade_solve(*fx.cascade, p).value, exact, 0.005 * std::max(std::abs(exact), 0.1))
          << id;
    }
  }
}

TEST(Cascade, DomainDoublingLeavesValueUnchanged) {
  auto spec = x2_spec();
  const auto p = CadlagPath::constant(0.2, 0.0);
  spec.dt = 5e-3;
  const double base = cascade_solve(spec, p).value;
  spec.x_min = 0.2 - 12.0;
  spec.x_max = 0.2 + 12.0;
  spec.nx = 481;
  spec.y_min = -2.0 * 6.0 * std::sqrt(0.5);
  spec.y_max = -spec.y_min;
  spec.ny = 481;
  EXPECT_NEAR(cascade_solve(spec, p).value, base, 1e-4);
}

TEST(Cascade, NonlinearGeneratorAgreesWithMonteCarlo) {
  CascadeSpec spec;
  spec.terminal = [](double x, double y) { return std::sin(x) + 0.5 * y * y; };
  spec.stage1 = [](double, double, double v, double z) { return -0.2 * v + 0.1 * z; };
  spec.stage2 = [](double, double, double, double v, double) { return -0.2 * v; };
  spec.dt = 2e-3;
  const PpdeProblem problem{cascade_terminal(spec), cascade_generator(spec), spec.T, 1};
  const auto p = CadlagPath::constant(0.3, 0.0);
  const double pde = cascade_solve(spec, p).value;
  const auto mc = u_eval(problem, p, MonteCarloSpec{100, 20000, 8, false}, RegressionBasis::standard());
  EXPECT_LE(std::abs(pde - mc.value), std::max(0.01 * std::abs(pde), 3.0 * mc.se) + 0.01);
}

TEST(Cascade, Errors) {
  auto spec = x2_spec();
  spec.x_min = -1.0;
  spec.x_max = 1.0;
  EXPECT_THROW(cascade_solve(spec, CadlagPath::constant(3.0, 0.0)), DomainError);
  EXPECT_THROW(cascade_solve(x2_spec(), CadlagPath({0.0, 0.1}, {0, 0, 0, 0}, 2)), DomainError);
  CascadeSpec empty;
  EXPECT_THROW(cascade_solve(empty, CadlagPath::constant(0.0, 0.0)), DomainError);

  // An explosive generator overflows and reports the mesh.
  auto blow = x2_spec();
  blow.stage1 = [](double, double, double v, double) { return 1e300 * v * v; };
  try {
    cascade_solve(blow, CadlagPath::constant(0.0, 0.0));
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_NE(std::string(e.what()).find("mesh spacing"), std::string::npos);
  }
}

TEST(Cascade, CsvExport) {
  auto spec = x2_spec();
  spec.nx = 5;
  spec.ny = 5;
  spec.dt = 0.25;
  const auto r = cascade_solve(spec, CadlagPath::constant(0.0, 0.0));
  std::stringstream a, b;
  write_cascade_csv(a, b, r);
  std::string line;
  std::getline(a, line);
  EXPECT_EQ(line, "# schema=1");
  std::getline(a, line);
  EXPECT_EQ(line, "s,x,v");
  std::getline(b, line);
  std::getline(b, line);
  EXPECT_EQ(line, "s,x,y,v");
  int rows = 0;
  while (std::getline(a, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(r.v1.times.size() * 5));
}
