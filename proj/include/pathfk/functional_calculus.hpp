#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>

#include "pathfk/path_space.hpp"

namespace pathfk {

/// A real-valued functional of a path.
///
/// `evaluate` must be deterministic and re-entrant: derivative stencils
/// call it on several bumped copies of the same path, possibly from
/// different threads. Growth is declared, not checked:
/// |u(p)| <= growth_constant * (1 + ||p||^growth_order).
struct Functional {
  std::string name;
  std::function<double(PathView)> evaluate;
  double growth_order = 0.0;
  double growth_constant = 1.0;

  double operator()(PathView path) const { return evaluate(path); }
};

/// Value and Dupire derivatives of a functional at one path.
struct DerivativeBundle {
  double value = 0.0;
  Eigen::VectorXd vertical;  // D_x u
  Eigen::MatrixXd hessian;   // D_xx u, symmetric
  double horizontal = 0.0;   // D_t u
  double step_vertical = 0.0;
  double step_horizontal = 0.0;
};

/// Supplies a derivative bundle at any path prefix, e.g. closed-form
/// derivatives of an oracle or finite differences of a functional.
using BundleSupplier = std::function<DerivativeBundle(PathView)>;

double default_vertical_step(PathView path);
/// 1e-3 (T - t), capped at T - t.
double default_horizontal_step(double t, double T);

/// Central differences on the vertical bump, one component per direction.
Eigen::VectorXd vertical_derivative(const Functional& u, PathView path, double h);

/// Second-order central stencil; off-diagonals use the four-point mixed
/// stencil. The result is symmetrized.
Eigen::MatrixXd vertical_hessian(const Functional& u, PathView path, double h);

/// One-sided difference along the flat extension (u(path_{t,t+delta}) -
/// u(path)) / delta. With `richardson`, returns 2 D(delta/2) - D(delta).
/// Requires t + delta <= T.
double horizontal_derivative(const Functional& u, PathView path, double delta, double T,
                             bool richardson = false);

DerivativeBundle derivative_bundle(const Functional& u, PathView path, double h,
                                   double delta, double T, bool richardson = false);

/// Bundle supplier backed by finite differences with the default steps.
BundleSupplier finite_difference_supplier(Functional u, double T);

/// How the quadratic-variation term of the discrete Ito expansion is realized.
enum class QuadraticVariation {
  Pathwise,  // dX dX^T along the sampled path
  Brownian,  // dt * Identity
};

/// u(X_T) - u(X_0) minus the discrete functional Ito expansion
///   sum_k D_t u dt + D_x u . dX_k + 1/2 <D_xx u, QV_k>
/// with derivatives evaluated at the prefix ending at each grid node.
/// Every grid node must be a breakpoint of `x`.
double ito_residual(const Functional& u, const BundleSupplier& du, PathView x,
                    const TimeGrid& grid,
                    QuadraticVariation qv = QuadraticVariation::Pathwise);

/// `name,t,value,D_t,D_x_0..,D_xx_00..,h,delta`
void write_derivative_header(std::ostream& out, std::size_t dimension);
void write_derivative_row(std::ostream& out, const std::string& name, double t,
                          const DerivativeBundle& b);

}  // namespace pathfk
