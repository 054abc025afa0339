#include "pathfk/path_space.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pathfk/error.hpp"

namespace pathfk {

namespace {

double time_tol(double s) { return kTimeTolerance * std::max(1.0, std::abs(s)); }

double euclid(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double euclid_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TimeGrid::TimeGrid(double t0_, double T_, std::size_t steps_)
    : t0(t0_), T(T_), steps(steps_) {
  if (!(T_ > t0_)) throw DomainError("TimeGrid: T must exceed t0");
  if (steps_ == 0) throw DomainError("TimeGrid: steps must be positive");
}

double TimeGrid::node(std::size_t k) const noexcept {
  return k == steps ? T : t0 + static_cast<double>(k) * dt();
}

long TimeGrid::index_of(double s) const noexcept {
  const double r = (s - t0) / dt();
  const double k = std::round(r);
  if (k < 0.0 || k > static_cast<double>(steps)) return -1;
  if (std::abs(node(static_cast<std::size_t>(k)) - s) > 1e-9 * std::max(1.0, std::abs(T)))
    return -1;
  return static_cast<long>(k);
}

PathView::PathView(std::span<const double> times, std::span<const double> values,
                   std::size_t dimension)
    : times_(times), values_(values), dim_(dimension) {}

std::size_t PathView::locate(double s) const {
  const double tol = time_tol(s);
  if (s < -tol || s > horizon() + tol) {
    throw DomainError("value_at: time " + std::to_string(s) + " outside [0, " +
                      std::to_string(horizon()) + "]");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), s + tol);
  if (it == times_.begin()) return 0;
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

PathView PathView::head(std::size_t count) const {
  if (count == 0 || count > size()) throw DomainError("head: bad breakpoint count");
  return PathView(times_.first(count), values_.first(count * dim_), dim_);
}

CadlagPath::CadlagPath(std::vector<double> times, std::vector<double> values,
                       std::size_t dimension)
    : times_(std::move(times)), values_(std::move(values)), dim_(dimension) {
  if (dim_ == 0) throw DomainError("CadlagPath: dimension must be positive");
  if (times_.empty()) throw DomainError("CadlagPath: no breakpoints");
  if (times_.front() != 0.0) throw DomainError("CadlagPath: first breakpoint must be 0");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1]))
      throw DomainError("CadlagPath: breakpoints must be strictly increasing");
  }
  if (values_.size() != times_.size() * dim_)
    throw DomainError("CadlagPath: values/breakpoints size mismatch");
}

CadlagPath CadlagPath::constant(std::span<const double> value, double horizon) {
  std::vector<double> times{0.0};
  std::vector<double> values(value.begin(), value.end());
  if (horizon > 0.0) {
    times.push_back(horizon);
    values.insert(values.end(), value.begin(), value.end());
  } else if (horizon < 0.0) {
    throw DomainError("CadlagPath: negative horizon");
  }
  return CadlagPath(std::move(times), std::move(values), value.size());
}

CadlagPath CadlagPath::constant(double value, double horizon) {
  const double v[1] = {value};
  return constant(std::span<const double>(v, 1), horizon);
}

CadlagPath CadlagPath::scalar(std::vector<double> times, std::vector<double> values) {
  return CadlagPath(std::move(times), std::move(values), 1);
}

double sup_norm(PathView path) {
  double m = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) m = std::max(m, euclid(path.point(i)));
  return m;
}

double d_infinity(PathView a, PathView b) {
  if (a.dimension() != b.dimension()) throw DomainError("d_infinity: dimension mismatch");
  if (a.horizon() > b.horizon()) std::swap(a, b);
  const double t = a.horizon();
  const double tbar = b.horizon();

  double gap = 0.0;
  // [0, t): both paths are steps, so the sup is attained on the union of
  // breakpoints.
  auto common = [&](double r) {
    if (r < t) gap = std::max(gap, euclid_diff(a.value_at(r), b.value_at(r)));
  };
  for (double r : a.times()) common(r);
  for (double r : b.times()) common(r);
  // [t, tbar]: compare a's terminal value with b's tail.
  const auto at = a.terminal();
  gap = std::max(gap, euclid_diff(at, b.value_at(t)));
  for (double r : b.times()) {
    if (r > t && r <= tbar) gap = std::max(gap, euclid_diff(at, b.value_at(r)));
  }
  return gap + (tbar - t);
}

CadlagPath vertical_bump(PathView path, std::span<const double> x) {
  if (x.size() != path.dimension()) throw DomainError("vertical_bump: dimension mismatch");
  std::vector<double> times(path.times().begin(), path.times().end());
  std::vector<double> values(path.values().begin(), path.values().end());
  const std::size_t off = (path.size() - 1) * path.dimension();
  for (std::size_t i = 0; i < x.size(); ++i) values[off + i] += x[i];
  return CadlagPath(std::move(times), std::move(values), path.dimension());
}

CadlagPath vertical_bump(PathView path, double x) {
  const double v[1] = {x};
  return vertical_bump(path, std::span<const double>(v, 1));
}

CadlagPath horizontal_extension(PathView path, double s) {
  const double t = path.horizon();
  if (s < t) throw DomainError("horizontal_extension: s precedes the horizon");
  std::vector<double> times(path.times().begin(), path.times().end());
  std::vector<double> values(path.values().begin(), path.values().end());
  if (s > t) {
    times.push_back(s);
    const auto term = path.terminal();
    values.insert(values.end(), term.begin(), term.end());
  }
  return CadlagPath(std::move(times), std::move(values), path.dimension());
}

CadlagPath splice_brownian(PathView prefix, const TimeGrid& grid,
                           std::span<const double> increments) {
  const std::size_t d = prefix.dimension();
  if (std::abs(grid.t0 - prefix.horizon()) > time_tol(grid.t0))
    throw DomainError("splice_brownian: grid does not start at the prefix horizon");
  if (increments.size() != grid.steps * d)
    throw DomainError("splice_brownian: increment count does not match grid");

  std::vector<double> times(prefix.times().begin(), prefix.times().end());
  std::vector<double> values(prefix.values().begin(), prefix.values().end());
  times.reserve(times.size() + grid.steps);
  values.reserve(values.size() + grid.steps * d);

  std::vector<double> pos(prefix.terminal().begin(), prefix.terminal().end());
  for (std::size_t k = 0; k < grid.steps; ++k) {
    for (std::size_t j = 0; j < d; ++j) pos[j] += increments[k * d + j];
    times.push_back(grid.node(k + 1));
    values.insert(values.end(), pos.begin(), pos.end());
  }
  return CadlagPath(std::move(times), std::move(values), d);
}

CadlagPath freeze(PathView path, double t, double T, std::size_t n) {
  if (n == 0) throw DomainError("freeze: n must be positive");
  const double s = path.horizon();
  if (t > s + time_tol(s)) throw DomainError("freeze: t exceeds the path horizon");
  if (s > T + time_tol(T)) throw DomainError("freeze: path horizon exceeds T");
  const std::size_t d = path.dimension();

  std::vector<double> times;
  std::vector<double> values;
  for (std::size_t i = 0; i < path.size() && path.time(i) < t - time_tol(t); ++i) {
    times.push_back(path.time(i));
    const auto p = path.point(i);
    values.insert(values.end(), p.begin(), p.end());
  }
  auto node = [&](std::size_t k) {
    return k == n ? T : t + static_cast<double>(k) * (T - t) / static_cast<double>(n);
  };
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::min(node(k), s);
    const double b = std::min(node(k + 1), s);
    if (!(b - a > time_tol(b))) continue;
    times.push_back(a);
    const auto p = path.value_at(b);
    values.insert(values.end(), p.begin(), p.end());
  }
  if (times.empty() || s - times.back() > time_tol(s)) {
    times.push_back(s);
    const auto p = path.terminal();
    values.insert(values.end(), p.begin(), p.end());
  }
  return CadlagPath(std::move(times), std::move(values), d);
}

double running_integral(PathView path, std::size_t component) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    acc += path.point(i)[component] * (path.time(i + 1) - path.time(i));
  }
  return acc;
}

double running_max(PathView path, std::size_t component) {
  double m = path.point(0)[component];
  for (std::size_t i = 1; i < path.size(); ++i) m = std::max(m, path.point(i)[component]);
  return m;
}

void write_csv(std::ostream& out, PathView path) {
  out << "time";
  for (std::size_t j = 0; j < path.dimension(); ++j) out << ",value_" << j;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << path.time(i);
    for (double v : path.point(i)) out << ',' << v;
    out << '\n';
  }
}

CadlagPath read_csv(std::istream& in) {
  std::string line;
  std::size_t dim = 0;
  bool header = false;
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("time", 0) != 0) throw DomainError("path csv: missing header");
      dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      header = true;
      continue;
    }
    std::stringstream row(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw DomainError("path csv: bad number '" + cell + "'");
      }
      (col == 0 ? times : values).push_back(v);
      ++col;
    }
    if (col != dim + 1) throw DomainError("path csv: wrong column count");
  }
  if (!header) throw DomainError("path csv: empty input");
  return CadlagPath(std::move(times), std::move(values), dim);
}

}  // namespace pathfk
