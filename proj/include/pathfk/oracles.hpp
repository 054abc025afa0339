#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "pathfk/brownian.hpp"
#include "pathfk/bsde.hpp"
#include "pathfk/functional_calculus.hpp"

namespace pathfk {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// c(t) = sum_i coefficients[i] t^i.
struct PolynomialRate {
  std::vector<double> coefficients;

  double operator()(double t) const;
  /// Exact integral of c over [a, b] via the antiderivative.
  double integral(double a, double b) const;
  /// max |c| on [0, T].
  double bound(double T) const;
};

/// Generator f(t, y, z) = c(t) y with terminal Phi: the backward equation is
/// solved by Y(t) = E[Phi(spliced path) exp(int_t^T c)].
struct LinearGeneratorFixture {
  enum class ClosedForm { None, TerminalValue, TerminalSquare };

  PolynomialRate rate;
  Functional terminal;
  ClosedForm closed_form = ClosedForm::None;
  double T = 1.0;

  Generator generator() const;
};

/// Exact value when the terminal has a Gaussian closed form (SE 0),
/// otherwise the Monte-Carlo mean of Phi on paths spliced onto `prefix`
/// (grid [t, T]) times the exact discount factor.
Estimate linear_oracle_value(const LinearGeneratorFixture& fx, PathView prefix,
                             const SimulationConfig& sim);

/// Phi(path) = int_0^T phi(path(s)) ds with generator c(t) y.
///
/// `heat` is the heat-semigroup action H(tau, x) = E[phi(x + N(0, tau))] and
/// `heat_x`, `heat_xx` its x-derivatives (d_tau H = heat_xx / 2). When
/// `heat_integral` is set it returns the closed-form integrals over
/// tau in [0, L] of (H, H_x, H_xx); otherwise composite Simpson is used.
struct IntegralTerminalFixture {
  std::string name;
  std::function<double(double)> phi;
  std::function<double(double, double)> heat;
  std::function<double(double, double)> heat_x;
  std::function<double(double, double)> heat_xx;
  std::function<std::array<double, 3>(double, double)> heat_integral;
  PolynomialRate rate;
  double T = 1.0;
  std::size_t simpson_panels = 256;

  /// phi(x) = x^2, H = x^2 + tau.
  static IntegralTerminalFixture square(PolynomialRate rate = {}, double T = 1.0);
  /// phi(x) = sin x, H = exp(-tau / 2) sin x.
  static IntegralTerminalFixture sine(PolynomialRate rate = {}, double T = 1.0);

  Functional terminal() const;
  Generator generator() const;
};

/// Value, D_t u, D_x u and D_xx u of
///   u(path_t) = e^{int_t^T c} ( int_0^t phi(path(s)) ds + int_t^T H(s - t, path(t)) ds ),
/// with D_t u = -c(t) u - e^{int_t^T c} int_t^T d_tau H(s - t, path(t)) ds and
/// the vertical derivatives passing under the s-integral.
DerivativeBundle integral_oracle_bundle(const IntegralTerminalFixture& fx, PathView path);

/// The value of the bundle as a path functional.
Functional integral_oracle_functional(const IntegralTerminalFixture& fx);

}  // namespace pathfk
