#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "pathfk/bsde.hpp"
#include "pathfk/functional_calculus.hpp"
#include "pathfk/path_space.hpp"

namespace pathfk {

/// Two-stage classical PDE system equivalent to the path-dependent problem
/// with Phi(path) = terminal(path(t_bar), path(T) - path(t_bar)):
///
///   stage 2 on [t_bar, T] x R^2, x a parameter, diffusion in y:
///     d_s v2 + 1/2 d_yy v2 + f2(s, x, y, v2, d_y v2) = 0,  v2(T, x, y) = terminal(x, y)
///   stage 1 on [t, t_bar] x R:
///     d_s v1 + 1/2 d_xx v1 + f1(s, x, v1, d_x v1) = 0,     v1(t_bar, x) = v2(t_bar, x, 0)
///
/// u(path_s) = v1(s, path(s)) for s <= t_bar and
///             v2(s, path(t_bar), path(s) - path(t_bar)) for s >= t_bar.
struct CascadeSpec {
  double t_bar = 0.5;
  double T = 1.0;
  std::function<double(double, double)> terminal;
  /// f1(s, x, y, z); empty means zero.
  std::function<double(double, double, double, double)> stage1;
  /// f2(s, x1, x2, y, z); empty means zero.
  std::function<double(double, double, double, double, double)> stage2;

  /// Spatial domains; when x_min >= x_max the x domain defaults to
  /// path(t) +/- 6 sqrt(T), and likewise y to 0 +/- 6 sqrt(T - t_bar).
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  std::size_t nx = 241;  // odd counts keep the centre on a node
  std::size_t ny = 241;
  double dt = 1e-3;
  double theta = 0.5;  // implicit weight of the diffusion step
};

struct Grid1D {
  std::vector<double> x;
  std::vector<double> times;              // stage time levels, descending
  std::vector<std::vector<double>> v;     // v[level][ix]
};

struct Grid2D {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> times;              // descending from T
  std::vector<std::vector<double>> v;     // v[level][ix * ny + iy]
};

struct CascadeResult {
  double value = 0.0;
  Grid1D v1;  // empty when the path horizon is past t_bar
  Grid2D v2;
};

/// Crank-Nicolson weighted diffusion with the generator explicit, Dirichlet
/// far-field values frozen at the terminal data. Scalar paths only.
CascadeResult cascade_solve(const CascadeSpec& spec, PathView path);

/// Phi(path) = terminal(path(t_bar), path(T) - path(t_bar)).
Functional cascade_terminal(const CascadeSpec& spec);
/// f(path_s, y, z) switching from f1 to f2 at t_bar.
Generator cascade_generator(const CascadeSpec& spec);

/// Solves a x_{i-1} + b x_i + c x_{i+1} = r in place (Thomas algorithm).
/// Throws SolverError on a zero pivot.
void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<double>& c, std::vector<double>& r);

/// `s,x,v` rows for stage 1 and `s,x,y,v` rows for stage 2, every
/// `stride`-th time level.
void write_cascade_csv(std::ostream& v1_out, std::ostream& v2_out, const CascadeResult& r,
                       std::size_t stride = 1);

}  // namespace pathfk
