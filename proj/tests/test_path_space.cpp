#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pathfk/error.hpp"
#include "pathfk/path_space.hpp"

using namespace pathfk;

namespace {

// Random scalar step path on [0, horizon] with `n` breakpoints.
CadlagPath random_step_path(std::mt19937_64& rng, double horizon, std::size_t n,
                            std::size_t dim = 1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> times{0.0};
  for (std::size_t i = 1; i + 1 < n; ++i) times.push_back(u(rng) * horizon);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (horizon > times.back()) times.push_back(horizon);
  std::vector<double> values(times.size() * dim);
  for (double& v : values) v = g(rng);
  return CadlagPath(times, values, dim);
}

// Dense-sampling oracle for d_infinity: evaluates both paths on a fine grid
// plus every breakpoint and the points just before them.
double d_infinity_brute(const CadlagPath& a0, const CadlagPath& b0) {
  const CadlagPath* a = &a0;
  const CadlagPath* b = &b0;
  if (a->horizon() > b->horizon()) std::swap(a, b);
  const double t = a->horizon();
  std::vector<double> probes;
  for (int i = 0; i <= 4000; ++i) probes.push_back(b->horizon() * i / 4000.0);
  for (double r : a->times()) probes.push_back(r);
  for (double r : b->times()) probes.push_back(r);
  double m = 0.0;
  for (double r : probes) {
    const auto bv = b->view().value_at(std::min(r, b->horizon()));
    std::span<const double> av = r < t ? a->view().value_at(r) : a->view().terminal();
    double s = 0.0;
    for (std::size_t j = 0; j < av.size(); ++j) s += (av[j] - bv[j]) * (av[j] - bv[j]);
    m = std::max(m, std::sqrt(s));
  }
  return m + (b->horizon() - t);
}

}  // namespace

TEST(PathSpace, InvariantsRejectMalformedPaths) {
  EXPECT_THROW(CadlagPath::scalar({0.1, 1.0}, {1.0, 2.0}), DomainError);
  EXPECT_THROW(CadlagPath::scalar({0.0, 0.5, 0.5}, {1.0, 2.0, 3.0}), DomainError);
  EXPECT_THROW(CadlagPath::scalar({0.0, 1.0}, {1.0}), DomainError);
  EXPECT_THROW(CadlagPath({0.0, 1.0}, {1.0, 2.0, 3.0}, 2), DomainError);
}

TEST(PathSpace, ValueAtIsRightContinuous) {
  const auto c = CadlagPath::constant(3.0, 1.0);
  EXPECT_EQ(c.view().scalar_at(0.5), 3.0);

  const auto p = CadlagPath::scalar({0.0, 0.5}, {1.0, 2.0});
  EXPECT_EQ(p.view().scalar_at(0.5), 2.0);
  EXPECT_EQ(p.view().scalar_at(0.5 - 1e-9), 1.0);
  EXPECT_EQ(p.view().scalar_at(0.0), 1.0);
  EXPECT_THROW(p.view().scalar_at(0.6), DomainError);
  EXPECT_THROW(p.view().scalar_at(-0.1), DomainError);
}

TEST(PathSpace, SupNorm) {
  const double v[2] = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(sup_norm(CadlagPath::constant(std::span<const double>(v, 2), 1.0)), 5.0);
  EXPECT_DOUBLE_EQ(sup_norm(CadlagPath::scalar({0.0, 0.3, 0.6}, {1.0, -2.0, 0.5})), 2.0);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_step_path(rng, 1.0, 30, 2);
    double brute = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double x = p.values()[2 * i];
      const double y = p.values()[2 * i + 1];
      brute = std::max(brute, std::hypot(x, y));
    }
    EXPECT_DOUBLE_EQ(sup_norm(p), brute);
  }
}

TEST(PathSpace, DInfinityExamples) {
  std::mt19937_64 rng(11);
  const auto p = random_step_path(rng, 0.8, 12);
  EXPECT_EQ(d_infinity(p, p), 0.0);

  const auto a = CadlagPath::constant(2.0, 1.0);
  const auto b = CadlagPath::constant(2.0, 1.5);
  EXPECT_DOUBLE_EQ(d_infinity(a, b), 0.5);
  EXPECT_DOUBLE_EQ(d_infinity(b, a), 0.5);

  EXPECT_DOUBLE_EQ(d_infinity(p, vertical_bump(p, 0.37)), 0.37);
  EXPECT_DOUBLE_EQ(d_infinity(p, vertical_bump(p, -1.25)), 1.25);

  EXPECT_THROW(d_infinity(p, CadlagPath({0.0, 1.0}, {0, 0, 0, 0}, 2)), DomainError);
}

TEST(PathSpace, DInfinityMatchesDenseSampling) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_step_path(rng, 0.6, 8);
    const auto b = random_step_path(rng, 0.6 + 0.4 * (trial % 3) / 2.0, 9);
    EXPECT_NEAR(d_infinity(a, b), d_infinity_brute(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(d_infinity(a, b), d_infinity(b, a));
  }
}

TEST(PathSpace, DInfinityTriangleInequality) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_step_path(rng, 1.0, 6, 2);
    const auto b = random_step_path(rng, 1.0, 7, 2);
    const auto c = random_step_path(rng, 1.0, 5, 2);
    EXPECT_LE(d_infinity(a, c), d_infinity(a, b) + d_infinity(b, c) + 1e-12);
  }
}

TEST(PathSpace, VerticalBump) {
  std::mt19937_64 rng(1);
  const auto p = random_step_path(rng, 0.7, 10);
  EXPECT_EQ(vertical_bump(p, 0.0), p);

  const auto c = CadlagPath::constant(1.5, 0.7);
  const auto bumped = vertical_bump(c, 0.25);
  EXPECT_EQ(bumped.view().scalar_at(0.3), 1.5);
  EXPECT_EQ(bumped.view().terminal_scalar(), 1.75);
  EXPECT_EQ(bumped.horizon(), 0.7);

  const auto twice = vertical_bump(vertical_bump(p, 0.5), -0.5);
  EXPECT_EQ(twice.times(), p.times());
  for (std::size_t i = 0; i + 1 < p.size(); ++i) EXPECT_EQ(twice.values()[i], p.values()[i]);
  EXPECT_DOUBLE_EQ(twice.view().terminal_scalar(), p.view().terminal_scalar());

  EXPECT_THROW(vertical_bump(p, std::vector<double>{1.0, 2.0}), DomainError);
}

TEST(PathSpace, HorizontalExtension) {
  std::mt19937_64 rng(2);
  const auto p = random_step_path(rng, 0.4, 10);
  EXPECT_EQ(horizontal_extension(p, 0.4), p);

  const auto c = horizontal_extension(CadlagPath::constant(2.0, 0.4), 0.9);
  EXPECT_EQ(c.horizon(), 0.9);
  EXPECT_DOUBLE_EQ(sup_norm(c), 2.0);

  const auto e = horizontal_extension(p, 0.9);
  for (double r : {0.4, 0.5, 0.75, 0.9}) EXPECT_EQ(e.view().scalar_at(r), p.view().terminal_scalar());
  for (double r : {0.0, 0.1, 0.39}) EXPECT_EQ(e.view().scalar_at(r), p.view().scalar_at(r));
  EXPECT_THROW(horizontal_extension(p, 0.3), DomainError);
}

TEST(PathSpace, SpliceBrownian) {
  const auto prefix = CadlagPath::scalar({0.0, 0.2, 0.5}, {0.0, 1.0, 0.7});
  const TimeGrid grid(0.5, 1.0, 5);
  const std::vector<double> zeros(5, 0.0);
  const auto flat = splice_brownian(prefix, grid, zeros);
  const auto ext = horizontal_extension(prefix, 1.0);
  for (double r = 0.0; r <= 1.0; r += 0.01)
    EXPECT_EQ(flat.view().scalar_at(r), ext.view().scalar_at(r));

  const std::vector<double> inc{0.1, -0.3, 0.25, 0.05, 0.4};
  const auto s = splice_brownian(prefix, grid, inc);
  EXPECT_NEAR(s.view().terminal_scalar(), 0.7 + 0.5, 1e-15);
  EXPECT_EQ(s.view().scalar_at(0.5), 0.7);  // no jump at the splice time
  EXPECT_EQ(s.view().scalar_at(0.3), 1.0);

  EXPECT_THROW(splice_brownian(prefix, TimeGrid(0.4, 1.0, 5), inc), DomainError);
  EXPECT_THROW(splice_brownian(prefix, grid, std::vector<double>(4, 0.0)), DomainError);
}

TEST(PathSpace, FreezeExamples) {
  // Linear path r -> r sampled finely: [0, 0.5) -> 0.5, [0.5, 1) -> 1.
  std::vector<double> times;
  std::vector<double> values;
  for (int i = 0; i <= 1000; ++i) {
    times.push_back(i / 1000.0);
    values.push_back(i / 1000.0);
  }
  times.back() = 1.0;
  const auto lin = CadlagPath::scalar(times, values);
  const auto f = freeze(lin, 0.0, 1.0, 2);
  EXPECT_EQ(f.times(), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_DOUBLE_EQ(f.view().scalar_at(0.2), 0.5);
  EXPECT_DOUBLE_EQ(f.view().scalar_at(0.7), 1.0);
  EXPECT_DOUBLE_EQ(f.view().scalar_at(1.0), 1.0);

  const auto c = CadlagPath::constant(-0.3, 1.0);
  const auto fc = freeze(c, 0.0, 1.0, 4);
  for (double r = 0.0; r <= 1.0; r += 0.05) EXPECT_EQ(fc.view().scalar_at(r), -0.3);

  // A step path with jumps on the freezing grid maps each cell to the value
  // at the cell's right endpoint.
  const auto step = CadlagPath::scalar({0.0, 0.25, 0.5, 0.75, 1.0}, {1.0, 2.0, 3.0, 4.0, 5.0});
  const auto fs = freeze(step, 0.0, 1.0, 4);
  EXPECT_EQ(fs.values(), (std::vector<double>{2.0, 3.0, 4.0, 5.0, 5.0}));
}

TEST(PathSpace, FreezeValidation) {
  const auto c = CadlagPath::constant(1.0, 0.6);
  EXPECT_THROW(freeze(c, 0.0, 1.0, 0), DomainError);
  EXPECT_THROW(freeze(c, 0.7, 1.0, 2), DomainError);
}

TEST(PathSpace, FreezeKeepsPrefixAndTerminal) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_step_path(rng, 0.9, 40);
    const double t = 0.3;
    for (std::size_t n : {1u, 2u, 3u, 8u}) {
      const auto f = freeze(p, t, 1.0, n);
      EXPECT_EQ(f.horizon(), p.horizon());
      EXPECT_EQ(f.view().terminal_scalar(), p.view().terminal_scalar());
      for (double r = 0.0; r < t - 1e-9; r += 0.01)
        EXPECT_EQ(f.view().scalar_at(r), p.view().scalar_at(r));
      EXPECT_LE(sup_norm(f), sup_norm(p));
    }
  }
}

TEST(PathSpace, FreezeAppliedTwiceLooksOneCellFurther) {
  // The right-endpoint projection is not idempotent: a second pass reads
  // the first pass at t_{k+1}, which already holds p(t_{k+2}).
  std::mt19937_64 rng(4);
  const auto p = random_step_path(rng, 1.0, 60);
  const std::size_t n = 5;
  const auto once = freeze(p, 0.0, 1.0, n);
  const auto twice = freeze(once, 0.0, 1.0, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double mid = (k + 0.5) / n;
    const double ahead = std::min(1.0, (k + 2.0) / n);
    EXPECT_EQ(twice.view().scalar_at(mid), p.view().scalar_at(ahead));
  }
  // Paths that are constant on [t, T] are fixed points.
  const auto flat = horizontal_extension(CadlagPath::scalar({0.0, 0.1}, {1.0, 2.0}), 1.0);
  EXPECT_EQ(freeze(freeze(flat, 0.1, 1.0, 3), 0.1, 1.0, 3), freeze(flat, 0.1, 1.0, 3));
}

TEST(PathSpace, FreezeConvergesForFinelySampledPaths) {
  // Finely sampled continuous path: sin(6 r) + r.
  std::vector<double> times;
  std::vector<double> values;
  for (int i = 0; i <= 4096; ++i) {
    const double r = i / 4096.0;
    times.push_back(r);
    values.push_back(std::sin(6.0 * r) + r);
  }
  const auto p = CadlagPath::scalar(times, values);
  // |p'| <= 7 bounds the error on a cell of width 1/n by 7/n.
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n : {8u, 16u, 32u, 64u, 128u, 256u}) {
    const double d = d_infinity(freeze(p, 0.0, 1.0, n), p);
    EXPECT_LE(d, 7.0 / static_cast<double>(n)) << "n=" << n;
    EXPECT_LT(d, previous) << "n=" << n;
    previous = d;
  }
  EXPECT_LT(previous, 0.03);
}

TEST(PathSpace, CsvRoundTrip) {
  std::mt19937_64 rng(12);
  const auto p = random_step_path(rng, 0.75, 20, 3);
  std::stringstream ss;
  write_csv(ss, p);
  EXPECT_EQ(ss.str().substr(0, 30), "time,value_0,value_1,value_2\n0");
  const auto q = read_csv(ss);
  EXPECT_EQ(p, q);

  std::stringstream bad("time,value_0\n0,1\n0.5,abc\n");
  EXPECT_THROW(read_csv(bad), DomainError);
}

TEST(PathSpace, TimeGrid) {
  const TimeGrid g(0.2, 1.0, 8);
  EXPECT_DOUBLE_EQ(g.dt(), 0.1);
  EXPECT_EQ(g.node(8), 1.0);
  EXPECT_EQ(g.index_of(0.6), 4);
  EXPECT_EQ(g.index_of(0.65), -1);
  EXPECT_THROW(TimeGrid(1.0, 1.0, 4), DomainError);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0), DomainError);
}
