#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace pathfk {

/// Relative tolerance used when locating a time on a breakpoint set.
/// Grid nodes produced by different (but equivalent) arithmetic, e.g.
/// t + k*(T-t)/n versus t + j*dt, compare equal under this tolerance.
inline constexpr double kTimeTolerance = 1e-12;

/// Uniform grid t0 < t0+dt < ... < T with `steps` intervals.
struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  std::size_t steps = 1;

  TimeGrid() = default;
  TimeGrid(double t0, double T, std::size_t steps);

  double dt() const noexcept { return (T - t0) / static_cast<double>(steps); }
  /// Node k; node(steps) is exactly T.
  double node(std::size_t k) const noexcept;
  /// Index of the node closest to `s` if it lies on the grid, else -1.
  long index_of(double s) const noexcept;
};

/// Non-owning read-only view of a step path.
///
/// Breakpoints are strictly increasing, start at 0 and end at the horizon.
/// Between breakpoints the path is constant with the value of the left
/// breakpoint (right-continuous steps). Values are stored row-major,
/// `dimension` reals per breakpoint.
class PathView {
 public:
  PathView() = default;
  PathView(std::span<const double> times, std::span<const double> values,
           std::size_t dimension);

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t dimension() const noexcept { return dim_; }
  double horizon() const noexcept { return times_.back(); }

  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  double time(std::size_t i) const noexcept { return times_[i]; }
  std::span<const double> point(std::size_t i) const noexcept {
    return values_.subspan(i * dim_, dim_);
  }
  std::span<const double> terminal() const noexcept { return point(size() - 1); }
  /// First component of the terminal value; the common d = 1 accessor.
  double terminal_scalar() const noexcept { return values_[(size() - 1) * dim_]; }

  /// Index of the greatest breakpoint <= s. Throws DomainError outside
  /// [0, horizon].
  std::size_t locate(double s) const;
  std::span<const double> value_at(double s) const { return point(locate(s)); }
  double scalar_at(double s, std::size_t component = 0) const {
    return values_[locate(s) * dim_ + component];
  }

  /// The prefix made of the first `count` breakpoints; its horizon is
  /// time(count - 1).
  PathView head(std::size_t count) const;

 private:
  std::span<const double> times_;
  std::span<const double> values_;
  std::size_t dim_ = 0;
};

/// Owning step path (an element of the path space up to its horizon).
class CadlagPath {
 public:
  CadlagPath() = default;
  /// Validates the invariants; throws DomainError on violation.
  CadlagPath(std::vector<double> times, std::vector<double> values,
             std::size_t dimension);

  /// Path equal to `value` on [0, horizon].
  static CadlagPath constant(std::span<const double> value, double horizon);
  static CadlagPath constant(double value, double horizon);
  /// Scalar path sampled at the given breakpoints.
  static CadlagPath scalar(std::vector<double> times, std::vector<double> values);

  PathView view() const noexcept {
    return PathView(times_, values_, dim_);
  }
  operator PathView() const noexcept { return view(); }  // NOLINT

  std::size_t size() const noexcept { return times_.size(); }
  std::size_t dimension() const noexcept { return dim_; }
  double horizon() const noexcept { return times_.back(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const CadlagPath&) const = default;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::size_t dim_ = 0;
};

/// max over breakpoints of the Euclidean norm of the value.
double sup_norm(PathView path);

/// Distance between paths of possibly different horizons: sup-norm gap on
/// the common part, gap between the shorter path's terminal value and the
/// longer path's tail, plus the horizon gap. Symmetric in its arguments.
double d_infinity(PathView a, PathView b);

/// Shift of the terminal value only.
CadlagPath vertical_bump(PathView path, std::span<const double> x);
CadlagPath vertical_bump(PathView path, double x);

/// Flat continuation of the terminal value up to time s >= horizon.
CadlagPath horizontal_extension(PathView path, double s);

/// Continues `prefix` from its horizon with a Brownian trajectory whose
/// increments live on `grid` (row-major, grid.steps * dimension reals).
CadlagPath splice_brownian(PathView prefix, const TimeGrid& grid,
                           std::span<const double> increments);

/// Piecewise-constant projection on the grid t_k = t + k (T - t) / n.
/// Unchanged on [0, t); on [t_k ^ s, t_{k+1} ^ s) it takes the path's value
/// at the right endpoint t_{k+1} ^ s; the value at the horizon s is kept.
CadlagPath freeze(PathView path, double t, double T, std::size_t n);

/// Exact integral of g(path(r)) over [0, horizon] for a scalar step path.
template <class F>
double integrate(PathView path, F&& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    acc += g(path.point(i)[0]) * (path.time(i + 1) - path.time(i));
  }
  return acc;
}

/// Running integral of one component over [0, horizon].
double running_integral(PathView path, std::size_t component = 0);
/// Running maximum of one component over [0, horizon].
double running_max(PathView path, std::size_t component = 0);

/// CSV with header `time,value_0,...,value_{d-1}`; the horizon is the last
/// time. Lines starting with '#' are ignored on read.
void write_csv(std::ostream& out, PathView path);
CadlagPath read_csv(std::istream& in);

}  // namespace pathfk
