#include "pathfk/oracles.hpp"

#include <array>
#include <cmath>

#include "pathfk/error.hpp"

namespace pathfk {

double PolynomialRate::operator()(double t) const {
  double acc = 0.0;
  for (std::size_t i = coefficients.size(); i-- > 0;) acc = acc * t + coefficients[i];
  return acc;
}

double PolynomialRate::integral(double a, double b) const {
  auto anti = [&](double t) {
    double acc = 0.0;
    for (std::size_t i = coefficients.size(); i-- > 0;)
      acc = acc * t + coefficients[i] / static_cast<double>(i + 1);
    return acc * t;
  };
  return anti(b) - anti(a);
}

double PolynomialRate::bound(double T) const {
  double acc = 0.0;
  const double tt = std::max(1.0, std::abs(T));
  double power = 1.0;
  for (double c : coefficients) {
    acc += std::abs(c) * power;
    power *= tt;
  }
  return acc;
}

Generator LinearGeneratorFixture::generator() const {
  return Generator::linear(rate, rate.bound(T), "linear");
}

Estimate linear_oracle_value(const LinearGeneratorFixture& fx, PathView prefix,
                             const SimulationConfig& sim) {
  const double t = prefix.horizon();
  const double discount = std::exp(fx.rate.integral(t, fx.T));
  const double tau = fx.T - t;
  switch (fx.closed_form) {
    case LinearGeneratorFixture::ClosedForm::TerminalValue:
      return {prefix.terminal_scalar() * discount, 0.0};
    case LinearGeneratorFixture::ClosedForm::TerminalSquare: {
      double sq = 0.0;
      for (double v : prefix.terminal()) sq += v * v;
      return {(sq + static_cast<double>(prefix.dimension()) * tau) * discount, 0.0};
    }
    case LinearGeneratorFixture::ClosedForm::None:
      break;
  }
  if (tau <= 0.0) return {fx.terminal(prefix) * discount, 0.0};
  const PathBatch batch = simulate(sim);
  const auto paths = cumulate(batch, prefix);
  std::vector<double> phi(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) phi[i] = fx.terminal(paths[i]);
  const auto [mean, se] = mean_and_se(phi);
  return {mean * discount, se * discount};
}

namespace {

template <class F>
double simpson(F&& g, double a, double b, std::size_t panels) {
  if (panels % 2 == 1) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double acc = g(a) + g(b);
  for (std::size_t i = 1; i < panels; ++i)
    acc += (i % 2 == 1 ? 4.0 : 2.0) * g(a + static_cast<double>(i) * h);
  return acc * h / 3.0;
}

}  // namespace

IntegralTerminalFixture IntegralTerminalFixture::square(PolynomialRate rate, double T) {
  IntegralTerminalFixture fx;
  fx.name = "x^2";
  fx.phi = [](double x) { return x * x; };
  fx.heat = [](double tau, double x) { return x * x + tau; };
  fx.heat_x = [](double, double x) { return 2.0 * x; };
  fx.heat_xx = [](double, double) { return 2.0; };
  fx.heat_integral = [](double L, double x) {
    return std::array<double, 3>{L * x * x + 0.5 * L * L, 2.0 * x * L, 2.0 * L};
  };
  fx.rate = std::move(rate);
  fx.T = T;
  return fx;
}

IntegralTerminalFixture IntegralTerminalFixture::sine(PolynomialRate rate, double T) {
  IntegralTerminalFixture fx;
  fx.name = "sin";
  fx.phi = [](double x) { return std::sin(x); };
  fx.heat = [](double tau, double x) { return std::exp(-0.5 * tau) * std::sin(x); };
  fx.heat_x = [](double tau, double x) { return std::exp(-0.5 * tau) * std::cos(x); };
  fx.heat_xx = [](double tau, double x) { return -std::exp(-0.5 * tau) * std::sin(x); };
  fx.heat_integral = [](double L, double x) {
    const double w = 2.0 * (1.0 - std::exp(-0.5 * L));
    return std::array<double, 3>{w * std::sin(x), w * std::cos(x), -w * std::sin(x)};
  };
  fx.rate = std::move(rate);
  fx.T = T;
  return fx;
}

Functional IntegralTerminalFixture::terminal() const {
  auto g = phi;
  return Functional{"integral-" + name, [g](PathView p) { return integrate(p, g); }, 2.0, 1.0};
}

Generator IntegralTerminalFixture::generator() const {
  return Generator::linear(rate, rate.bound(T), "linear");
}

DerivativeBundle integral_oracle_bundle(const IntegralTerminalFixture& fx, PathView path) {
  if (path.dimension() != 1) throw DomainError("integral oracle: scalar paths only");
  const double t = path.horizon();
  if (t > fx.T + kTimeTolerance) throw DomainError("integral oracle: horizon exceeds T");
  const double x = path.terminal_scalar();
  const double L = std::max(0.0, fx.T - t);

  std::array<double, 3> tail{};
  if (fx.heat_integral) {
    tail = fx.heat_integral(L, x);
  } else if (L > 0.0) {
    tail[0] = simpson([&](double tau) { return fx.heat(tau, x); }, 0.0, L, fx.simpson_panels);
    tail[1] = simpson([&](double tau) { return fx.heat_x(tau, x); }, 0.0, L, fx.simpson_panels);
    tail[2] = simpson([&](double tau) { return fx.heat_xx(tau, x); }, 0.0, L, fx.simpson_panels);
  }
  const double discount = std::exp(fx.rate.integral(t, fx.T));
  const double past = integrate(path, fx.phi);

  DerivativeBundle b;
  b.value = discount * (past + tail[0]);
  b.vertical = Eigen::VectorXd::Constant(1, discount * tail[1]);
  b.hessian = Eigen::MatrixXd::Constant(1, 1, discount * tail[2]);
  // d_tau H = H_xx / 2 under the heat semigroup.
  b.horizontal = -fx.rate(t) * b.value - discount * 0.5 * tail[2];
  return b;
}

Functional integral_oracle_functional(const IntegralTerminalFixture& fx) {
  return Functional{"oracle-" + fx.name,
                    [fx](PathView p) { return integral_oracle_bundle(fx, p).value; }, 2.0, 1.0};
}

}  // namespace pathfk
