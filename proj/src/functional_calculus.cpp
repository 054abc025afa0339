#include "pathfk/functional_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <vector>

#include "pathfk/error.hpp"

namespace pathfk {

namespace {

double eval_bumped(const Functional& u, PathView path, const std::vector<double>& x,
                   const char* direction) {
  try {
    return u(vertical_bump(path, x));
  } catch (...) {
    std::throw_with_nested(SolverError(std::string("evaluating ") + u.name +
                                       " at vertical bump " + direction));
  }
}

std::string direction_label(std::size_t i, int si, std::size_t j = 0, int sj = 0) {
  std::string s = (si > 0 ? "+h e_" : "-h e_") + std::to_string(i);
  if (sj != 0) s += (sj > 0 ? " +h e_" : " -h e_") + std::to_string(j);
  return s;
}

void require_step(double h, const char* what) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError(std::string(what) + " must be positive");
}

}  // namespace

double default_vertical_step(PathView path) { return 1e-4 * (1.0 + sup_norm(path)); }

double default_horizontal_step(double t, double T) {
  return std::min(1e-3 * (T - t), T - t);
}

Eigen::VectorXd vertical_derivative(const Functional& u, PathView path, double h) {
  require_step(h, "vertical step");
  const std::size_t d = path.dimension();
  Eigen::VectorXd grad(static_cast<Eigen::Index>(d));
  std::vector<double> x(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = h;
    const double up = eval_bumped(u, path, x, direction_label(i, 1).c_str());
    x[i] = -h;
    const double down = eval_bumped(u, path, x, direction_label(i, -1).c_str());
    x[i] = 0.0;
    grad[static_cast<Eigen::Index>(i)] = (up - down) / (2.0 * h);
  }
  return grad;
}

Eigen::MatrixXd vertical_hessian(const Functional& u, PathView path, double h) {
  require_step(h, "vertical step");
  const std::size_t d = path.dimension();
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd hess(n, n);
  const double centre = u(path);
  std::vector<double> x(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = h;
    const double up = eval_bumped(u, path, x, direction_label(i, 1).c_str());
    x[i] = -h;
    const double down = eval_bumped(u, path, x, direction_label(i, -1).c_str());
    x[i] = 0.0;
    hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
        (up - 2.0 * centre + down) / (h * h);
    for (std::size_t j = i + 1; j < d; ++j) {
      double corner[2][2];
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const int si = a == 0 ? 1 : -1;
          const int sj = b == 0 ? 1 : -1;
          x[i] = si * h;
          x[j] = sj * h;
          corner[a][b] = eval_bumped(u, path, x, direction_label(i, si, j, sj).c_str());
        }
      }
      x[i] = 0.0;
      x[j] = 0.0;
      const double mixed =
          (corner[0][0] - corner[0][1] - corner[1][0] + corner[1][1]) / (4.0 * h * h);
      hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mixed;
      hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = mixed;
    }
  }
  return 0.5 * (hess + hess.transpose());
}

double horizontal_derivative(const Functional& u, PathView path, double delta, double T,
                             bool richardson) {
  require_step(delta, "horizontal step");
  const double t = path.horizon();
  if (t + delta > T + kTimeTolerance * std::max(1.0, T))
    throw DomainError("horizontal_derivative: t + delta exceeds T");
  const double base = u(path);
  auto one_sided = [&](double step) {
    return (u(horizontal_extension(path, t + step)) - base) / step;
  };
  const double coarse = one_sided(delta);
  if (!richardson) return coarse;
  return 2.0 * one_sided(0.5 * delta) - coarse;
}

DerivativeBundle derivative_bundle(const Functional& u, PathView path, double h,
                                   double delta, double T, bool richardson) {
  DerivativeBundle b;
  b.value = u(path);
  b.vertical = vertical_derivative(u, path, h);
  b.hessian = vertical_hessian(u, path, h);
  b.step_vertical = h;
  b.step_horizontal = delta;
  // At the horizon there is no room for a flat extension.
  b.horizontal = delta > 0.0 ? horizontal_derivative(u, path, delta, T, richardson) : 0.0;
  return b;
}

BundleSupplier finite_difference_supplier(Functional u, double T) {
  return [u = std::move(u), T](PathView path) {
    return derivative_bundle(u, path, default_vertical_step(path),
                             default_horizontal_step(path.horizon(), T), T);
  };
}

double ito_residual(const Functional& u, const BundleSupplier& du, PathView x,
                    const TimeGrid& grid, QuadraticVariation qv) {
  const std::size_t d = x.dimension();
  const auto n = static_cast<Eigen::Index>(d);
  std::vector<std::size_t> idx(grid.steps + 1);
  for (std::size_t k = 0; k <= grid.steps; ++k) {
    const double tk = grid.node(k);
    idx[k] = x.locate(tk);
    if (std::abs(x.time(idx[k]) - tk) > 1e-9 * std::max(1.0, grid.T))
      throw DomainError("ito_residual: grid node is not a breakpoint of the path");
  }
  if (idx.back() + 1 != x.size())
    throw DomainError("ito_residual: path horizon does not match the grid");

  const double dt = grid.dt();
  double expansion = 0.0;
  Eigen::VectorXd dx(n);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const PathView prefix = x.head(idx[k] + 1);
    const DerivativeBundle b = du(prefix);
    const auto from = x.point(idx[k]);
    const auto to = x.point(idx[k + 1]);
    for (std::size_t j = 0; j < d; ++j) dx[static_cast<Eigen::Index>(j)] = to[j] - from[j];
    double second = 0.0;
    if (qv == QuadraticVariation::Pathwise) {
      second = dx.dot(b.hessian * dx);
    } else {
      second = b.hessian.trace() * dt;
    }
    expansion += b.horizontal * dt + b.vertical.dot(dx) + 0.5 * second;
  }
  const double start = u(x.head(idx[0] + 1));
  const double end = u(x);
  return end - start - expansion;
}

void write_derivative_header(std::ostream& out, std::size_t dimension) {
  out << "name,t,value,D_t";
  for (std::size_t i = 0; i < dimension; ++i) out << ",D_x_" << i;
  for (std::size_t i = 0; i < dimension; ++i)
    for (std::size_t j = 0; j < dimension; ++j) out << ",D_xx_" << i << j;
  out << ",h,delta\n";
}

void write_derivative_row(std::ostream& out, const std::string& name, double t,
                          const DerivativeBundle& b) {
  out << std::setprecision(17) << name << ',' << t << ',' << b.value << ',' << b.horizontal;
  for (Eigen::Index i = 0; i < b.vertical.size(); ++i) out << ',' << b.vertical[i];
  for (Eigen::Index i = 0; i < b.hessian.rows(); ++i)
    for (Eigen::Index j = 0; j < b.hessian.cols(); ++j) out << ',' << b.hessian(i, j);
  out << ',' << b.step_vertical << ',' << b.step_horizontal << '\n';
}

}  // namespace pathfk
