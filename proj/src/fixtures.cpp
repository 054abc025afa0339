#include "pathfk/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "pathfk/brownian.hpp"
#include "pathfk/error.hpp"

namespace pathfk {

namespace {

constexpr double kT = 1.0;

DerivativeBundle scalar_bundle(double value, double dt, double dx, double dxx) {
  DerivativeBundle b;
  b.value = value;
  b.horizontal = dt;
  b.vertical = Eigen::VectorXd::Constant(1, dx);
  b.hessian = Eigen::MatrixXd::Constant(1, 1, dxx);
  return b;
}

Functional terminal_value() {
  return Functional{"x(T)", [](PathView p) { return p.terminal_scalar(); }, 1.0, 1.0};
}

Functional terminal_square() {
  return Functional{"x(T)^2",
                    [](PathView p) {
                      const double x = p.terminal_scalar();
                      return x * x;
                    },
                    2.0, 1.0};
}

Fixture from_bundle(std::string id, std::string description, PpdeProblem problem,
                    std::function<DerivativeBundle(PathView)> bundle) {
  Fixture fx;
  fx.id = std::move(id);
  fx.description = std::move(description);
  fx.problem = std::move(problem);
  fx.bundle = bundle;
  fx.closed_form = [bundle](PathView p) { return bundle(p).value; };
  fx.functional = Functional{fx.id, fx.closed_form, fx.problem.terminal.growth_order, 1.0};
  return fx;
}

Fixture integral_fixture(std::string id, std::string description,
                         const IntegralTerminalFixture& ifx) {
  PpdeProblem problem{ifx.terminal(), ifx.generator(), ifx.T, 1};
  Fixture fx = from_bundle(std::move(id), std::move(description), std::move(problem),
                           [ifx](PathView p) { return integral_oracle_bundle(ifx, p); });
  const auto phi = ifx.phi;
  fx.features.push_back(Feature{"int " + ifx.name, [phi](PathView p) {
                                  return integrate(p, [&](double x) { return phi(x); });
                                }});
  fx.features.push_back(
      Feature{ifx.name + "(x)", [phi](PathView p) { return phi(p.terminal_scalar()); }});
  return fx;
}

Fixture linear_fixture(std::string id, std::string description, double c, bool square) {
  PpdeProblem problem{square ? terminal_square() : terminal_value(),
                      Generator::linear([c](double) { return c; }, std::abs(c)), kT, 1};
  return from_bundle(std::move(id), std::move(description), std::move(problem),
                     [c, square](PathView p) {
                       const double tau = kT - p.horizon();
                       const double e = std::exp(c * tau);
                       const double x = p.terminal_scalar();
                       if (!square) return scalar_bundle(e * x, -c * e * x, e, 0.0);
                       const double u = e * (x * x + tau);
                       return scalar_bundle(u, -c * u - e, 2.0 * e * x, 2.0 * e);
                     });
}

Fixture cascade_fixture(std::string id, std::string description, CascadeSpec spec,
                        std::function<double(PathView)> closed) {
  Fixture fx;
  fx.id = std::move(id);
  fx.description = std::move(description);
  fx.problem = PpdeProblem{cascade_terminal(spec), cascade_generator(spec), spec.T, 1};
  fx.closed_form = std::move(closed);
  fx.functional = Functional{fx.id, fx.closed_form, 2.0, 1.0};
  fx.cascade = std::move(spec);
  return fx;
}

std::vector<Fixture> build_catalog() {
  std::vector<Fixture> out;
  out.push_back(from_bundle("martingale-terminal", "Phi = x(T), f = 0; u = x(t)",
                            PpdeProblem{terminal_value(), Generator::zero(), kT, 1},
                            [](PathView p) {
                              return scalar_bundle(p.terminal_scalar(), 0.0, 1.0, 0.0);
                            }));
  out.push_back(from_bundle("heat-quadratic", "Phi = x(T)^2, f = 0; u = x(t)^2 + (T - t)",
                            PpdeProblem{terminal_square(), Generator::zero(), kT, 1},
                            [](PathView p) {
                              const double x = p.terminal_scalar();
                              return scalar_bundle(x * x + kT - p.horizon(), -1.0, 2.0 * x,
                                                   2.0);
                            }));
  out.push_back(linear_fixture("linear-c0.1-sq",
                               "Phi = x(T)^2, f = 0.1 y; u = e^{0.1 (T - t)} (x(t)^2 + T - t)",
                               0.1, true));
  out.push_back(linear_fixture("linear-c0.1-lin", "Phi = x(T), f = 0.1 y; u = e^{0.1 (T - t)} x(t)",
                               0.1, false));
  out.push_back(integral_fixture("integral-x2-c0",
                                 "Phi = int_0^T x(s)^2 ds, f = 0; closed-form bundle",
                                 IntegralTerminalFixture::square({}, kT)));
  out.push_back(integral_fixture("integral-x2-c0.1",
                                 "Phi = int_0^T x(s)^2 ds, f = 0.1 y; closed-form bundle",
                                 IntegralTerminalFixture::square({{0.1}}, kT)));
  out.push_back(integral_fixture("integral-sin-c0",
                                 "Phi = int_0^T sin x(s) ds, f = 0; closed-form bundle",
                                 IntegralTerminalFixture::sine({}, kT)));

  IntegralTerminalFixture running;
  running.name = "x";
  running.phi = [](double x) { return x; };
  running.heat = [](double, double x) { return x; };
  running.heat_x = [](double, double) { return 1.0; };
  running.heat_xx = [](double, double) { return 0.0; };
  running.heat_integral = [](double L, double x) { return std::array<double, 3>{L * x, L, 0.0}; };
  running.T = kT;
  out.push_back(integral_fixture("running-integral",
                                 "Phi = int_0^T x(s) ds, f = 0; u = int_0^t x + (T - t) x(t)",
                                 running));

  {
    Fixture ito;
    ito.id = "ito-integral-plus-square";
    ito.description = "u = int_0^t x(s) ds + x(t)^2 with exact derivatives (Ito fixture)";
    ito.functional = Functional{ito.id,
                                [](PathView p) {
                                  const double x = p.terminal_scalar();
                                  return running_integral(p) + x * x;
                                },
                                2.0, 1.0};
    ito.closed_form = ito.functional.evaluate;
    ito.bundle = [](PathView p) {
      const double x = p.terminal_scalar();
      return scalar_bundle(running_integral(p) + x * x, x, 2.0 * x, 2.0);
    };
    ito.problem = PpdeProblem{ito.functional, Generator::zero(), kT, 1};
    ito.ppde_solution = false;
    out.push_back(std::move(ito));
  }

  CascadeSpec sq_x;
  sq_x.t_bar = 0.5;
  sq_x.T = kT;
  sq_x.terminal = [](double x, double) { return x * x; };
  out.push_back(cascade_fixture(
      "cascade-x2", "Phi = x(t_bar)^2 with t_bar = 0.5; u = x(t)^2 + (t_bar - t) before t_bar",
      sq_x, [tb = sq_x.t_bar](PathView p) {
        const double t = p.horizon();
        if (t <= tb) return p.terminal_scalar() * p.terminal_scalar() + (tb - t);
        const double a = p.scalar_at(tb);
        return a * a;
      }));

  CascadeSpec sq_y = sq_x;
  sq_y.terminal = [](double, double y) { return y * y; };
  out.push_back(cascade_fixture(
      "cascade-y2", "Phi = (x(T) - x(t_bar))^2 with t_bar = 0.5; u = T - t_bar before t_bar",
      sq_y, [tb = sq_y.t_bar](PathView p) {
        const double t = p.horizon();
        if (t <= tb) return kT - tb;
        const double y = p.terminal_scalar() - p.scalar_at(tb);
        return y * y + (kT - t);
      }));
  return out;
}

}  // namespace

RegressionBasis fixture_basis(const Fixture& fixture, int degree) {
  RegressionBasis basis = RegressionBasis::standard(fixture.problem.dimension, degree);
  basis.features.insert(basis.features.end(), fixture.features.begin(), fixture.features.end());
  return basis;
}

const std::vector<Fixture>& fixture_catalog() {
  static const std::vector<Fixture> catalog = build_catalog();
  return catalog;
}

const Fixture& find_fixture(const std::string& id) {
  const auto& cat = fixture_catalog();
  const auto it = std::find_if(cat.begin(), cat.end(), [&](const Fixture& f) { return f.id == id; });
  if (it == cat.end()) throw UnknownFixture(id);
  return *it;
}

void write_catalog(std::ostream& out) {
  out << "id,version,closed_form,bundle,cascade,description\n";
  for (const auto& f : fixture_catalog()) {
    out << f.id << ',' << f.version << ',' << (f.closed_form ? "yes" : "no") << ','
        << (f.bundle ? "yes" : "no") << ',' << (f.cascade ? "yes" : "no") << ",\""
        << f.description << "\"\n";
  }
}

OrderedPair random_ordered_pair(std::uint64_t seed, std::size_t index) {
  std::mt19937_64 rng(stream_seed(seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int kind = static_cast<int>(rng() % 4);
  const double a = 0.5 + unit(rng);
  const double b = unit(rng) - 0.5;
  const double alpha = 0.5 * unit(rng);
  const double beta = 0.5 * unit(rng);
  const double c = 0.2 * unit(rng) - 0.1;
  const double k = 0.2 * unit(rng) - 0.1;
  const double kappa = 0.3 * unit(rng);

  auto base = [kind](PathView p) {
    const double x = p.terminal_scalar();
    switch (kind) {
      case 0: return x;
      case 1: return x * x;
      case 2: return running_integral(p);
      default: return std::sin(x);
    }
  };
  OrderedPair pair;
  pair.terminal1 = Functional{"phi1", [=](PathView p) { return a * base(p) + b; }, 2.0, 1.0};
  pair.terminal2 = Functional{"phi2",
                              [=](PathView p) {
                                const double x = p.terminal_scalar();
                                return a * base(p) + b + alpha * x * x + beta;
                              },
                              2.0, 1.0};
  pair.generator1 = Generator{"f1",
                              [=](PathView, double y, std::span<const double>) {
                                return c * y + k;
                              },
                              std::abs(c), 0.0, 1.0};
  pair.generator2 = Generator{"f2",
                              [=](PathView, double y, std::span<const double>) {
                                return c * y + k + kappa;
                              },
                              std::abs(c), 0.0, 1.0};
  return pair;
}

}  // namespace pathfk
