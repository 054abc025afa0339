#include "pathfk/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pathfk/error.hpp"

namespace pathfk {

void solve_tridiagonal(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<double>& c, std::vector<double>& r) {
  const std::size_t n = r.size();
  if (n == 0) return;
  std::vector<double> cp(n);
  double pivot = b[0];
  if (pivot == 0.0) throw SolverError("tridiagonal solve: zero pivot at row 0");
  cp[0] = c[0] / pivot;
  r[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = b[i] - a[i] * cp[i - 1];
    if (pivot == 0.0)
      throw SolverError("tridiagonal solve: zero pivot at row " + std::to_string(i));
    cp[i] = c[i] / pivot;
    r[i] = (r[i] - a[i] * r[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) r[i] -= cp[i] * r[i + 1];
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + static_cast<double>(i) * h;
  v.back() = hi;
  return v;
}

double interp1(const std::vector<double>& x, const std::vector<double>& v, double at) {
  if (at < x.front() || at > x.back())
    throw DomainError("cascade: evaluation point " + std::to_string(at) + " outside the mesh");
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  i = std::min(i, x.size() - 2);
  const double w = (at - x[i]) / (x[i + 1] - x[i]);
  return (1.0 - w) * v[i] + w * v[i + 1];
}

std::string mesh_info(double dxy, double dt, std::size_t n) {
  std::ostringstream s;
  s << "(mesh spacing " << dxy << ", time step " << dt << ", nodes " << n << ")";
  return s.str();
}

// One backward theta-step of d_s v + 1/2 v'' + f(v, v') = 0 on a uniform
// mesh with fixed boundary values.
template <class Source>
void theta_step(std::vector<double>& v, double h, double dt, double theta, Source&& source) {
  const std::size_t n = v.size();
  const double lam = 0.5 * dt / (h * h);
  const std::size_t m = n - 2;
  std::vector<double> a(m, -theta * lam);
  std::vector<double> b(m, 1.0 + 2.0 * theta * lam);
  std::vector<double> c(m, -theta * lam);
  std::vector<double> r(m);
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double lap = v[j - 1] - 2.0 * v[j] + v[j + 1];
    const double grad = (v[j + 1] - v[j - 1]) / (2.0 * h);
    r[j - 1] = v[j] + (1.0 - theta) * lam * lap + dt * source(j, v[j], grad);
  }
  r.front() += theta * lam * v.front();
  r.back() += theta * lam * v.back();
  a.front() = 0.0;
  c.back() = 0.0;
  solve_tridiagonal(a, b, c, r);
  for (std::size_t j = 1; j + 1 < n; ++j) v[j] = r[j - 1];
}

std::size_t level_count(double span, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt - 1e-9)));
}

}  // namespace

CascadeResult cascade_solve(const CascadeSpec& spec, PathView path) {
  if (path.dimension() != 1) throw DomainError("cascade: scalar paths only");
  if (!spec.terminal) throw DomainError("cascade: terminal function missing");
  if (!(spec.t_bar <= spec.T) || spec.t_bar < 0.0) throw DomainError("cascade: bad split time");
  if (spec.nx < 3 || spec.ny < 3) throw DomainError("cascade: need at least 3 nodes per axis");
  if (!(spec.dt > 0.0)) throw DomainError("cascade: time step must be positive");
  const double t = path.horizon();
  if (t > spec.T) throw DomainError("cascade: path horizon exceeds T");

  const bool before_split = t <= spec.t_bar + kTimeTolerance;
  const double anchor = before_split ? path.terminal_scalar() : path.scalar_at(spec.t_bar);
  const double half_x = 6.0 * std::sqrt(spec.T);
  const double half_y = 6.0 * std::sqrt(std::max(spec.T - spec.t_bar, 1e-12));

  CascadeResult out;
  Grid2D& g2 = out.v2;
  g2.x = spec.x_min < spec.x_max ? linspace(spec.x_min, spec.x_max, spec.nx)
                                 : linspace(anchor - half_x, anchor + half_x, spec.nx);
  g2.y = spec.y_min < spec.y_max ? linspace(spec.y_min, spec.y_max, spec.ny)
                                 : linspace(-half_y, half_y, spec.ny);
  const std::size_t nx = g2.x.size();
  const std::size_t ny = g2.y.size();
  const double dx = g2.x[1] - g2.x[0];
  const double dy = g2.y[1] - g2.y[0];

  // Stage 2, from T down to max(t, t_bar).
  const double stop2 = before_split ? spec.t_bar : t;
  std::vector<double> v2(nx * ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) v2[i * ny + j] = spec.terminal(g2.x[i], g2.y[j]);
  g2.times.push_back(spec.T);
  g2.v.push_back(v2);
  if (spec.T - stop2 > kTimeTolerance) {
    const std::size_t levels = level_count(spec.T - stop2, spec.dt);
    const double dt2 = (spec.T - stop2) / static_cast<double>(levels);
    const std::size_t keep = std::max<std::size_t>(1, levels / 20);
    std::vector<double> line(ny);
    for (std::size_t n = 0; n < levels; ++n) {
      const double s_next = spec.T - static_cast<double>(n) * dt2;
      for (std::size_t i = 0; i < nx; ++i) {
        std::copy_n(v2.begin() + static_cast<long>(i * ny), ny, line.begin());
        theta_step(line, dy, dt2, spec.theta, [&](std::size_t j, double v, double z) {
          return spec.stage2 ? spec.stage2(s_next, g2.x[i], g2.y[j], v, z) : 0.0;
        });
        std::copy(line.begin(), line.end(), v2.begin() + static_cast<long>(i * ny));
      }
      if (!std::all_of(v2.begin(), v2.end(), [](double v) { return std::isfinite(v); }))
        throw SolverError("cascade stage 2: non-finite values " + mesh_info(dy, dt2, ny));
      if ((n + 1) % keep == 0 || n + 1 == levels) {
        g2.times.push_back(n + 1 == levels ? stop2 : s_next - dt2);
        g2.v.push_back(v2);
      }
    }
  }

  if (!before_split) {
    const double x1 = anchor;
    const double x2 = path.terminal_scalar() - anchor;
    std::vector<double> slice(nx);
    for (std::size_t i = 0; i < nx; ++i) {
      std::vector<double> col(v2.begin() + static_cast<long>(i * ny),
                              v2.begin() + static_cast<long>((i + 1) * ny));
      slice[i] = interp1(g2.y, col, x2);
    }
    out.value = interp1(g2.x, slice, x1);
    return out;
  }

  // Stage 1 terminal: v1(t_bar, x) = v2(t_bar, x, 0).
  Grid1D& g1 = out.v1;
  g1.x = g2.x;
  std::vector<double> v1(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    std::vector<double> col(v2.begin() + static_cast<long>(i * ny),
                            v2.begin() + static_cast<long>((i + 1) * ny));
    v1[i] = interp1(g2.y, col, 0.0);
  }
  g1.times.push_back(spec.t_bar);
  g1.v.push_back(v1);
  if (spec.t_bar - t > kTimeTolerance) {
    const std::size_t levels = level_count(spec.t_bar - t, spec.dt);
    const double dt1 = (spec.t_bar - t) / static_cast<double>(levels);
    for (std::size_t n = 0; n < levels; ++n) {
      const double s_next = spec.t_bar - static_cast<double>(n) * dt1;
      theta_step(v1, dx, dt1, spec.theta, [&](std::size_t j, double v, double z) {
        return spec.stage1 ? spec.stage1(s_next, g1.x[j], v, z) : 0.0;
      });
      if (!std::all_of(v1.begin(), v1.end(), [](double v) { return std::isfinite(v); }))
        throw SolverError("cascade stage 1: non-finite values " + mesh_info(dx, dt1, nx));
      g1.times.push_back(n + 1 == levels ? t : s_next - dt1);
      g1.v.push_back(v1);
    }
  }
  out.value = interp1(g1.x, v1, path.terminal_scalar());
  return out;
}

Functional cascade_terminal(const CascadeSpec& spec) {
  return Functional{"cascade-terminal",
                    [phi = spec.terminal, tb = spec.t_bar](PathView p) {
                      const double a = p.scalar_at(tb);
                      return phi(a, p.terminal_scalar() - a);
                    },
                    2.0, 1.0};
}

Generator cascade_generator(const CascadeSpec& spec) {
  return Generator{"cascade-generator",
                   [f1 = spec.stage1, f2 = spec.stage2, tb = spec.t_bar](
                       PathView p, double y, std::span<const double> z) {
                     const double s = p.horizon();
                     if (s < tb) return f1 ? f1(s, p.terminal_scalar(), y, z[0]) : 0.0;
                     const double a = p.scalar_at(tb);
                     return f2 ? f2(s, a, p.terminal_scalar() - a, y, z[0]) : 0.0;
                   },
                   0.0, 0.0, 0.0};
}

void write_cascade_csv(std::ostream& v1_out, std::ostream& v2_out, const CascadeResult& r,
                       std::size_t stride) {
  stride = std::max<std::size_t>(1, stride);
  v1_out << "# schema=1\ns,x,v\n" << std::setprecision(17);
  for (std::size_t l = 0; l < r.v1.times.size(); l += stride)
    for (std::size_t i = 0; i < r.v1.x.size(); ++i)
      v1_out << r.v1.times[l] << ',' << r.v1.x[i] << ',' << r.v1.v[l][i] << '\n';
  v2_out << "# schema=1\ns,x,y,v\n" << std::setprecision(17);
  const std::size_t ny = r.v2.y.size();
  for (std::size_t l = 0; l < r.v2.times.size(); l += stride)
    for (std::size_t i = 0; i < r.v2.x.size(); ++i)
      for (std::size_t j = 0; j < ny; ++j)
        v2_out << r.v2.times[l] << ',' << r.v2.x[i] << ',' << r.v2.y[j] << ','
               << r.v2.v[l][i * ny + j] << '\n';
}

}  // namespace pathfk
