#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pathfk/brownian.hpp"
#include "pathfk/error.hpp"
#include "pathfk/functional_calculus.hpp"
#include "pathfk/parallel.hpp"
#include "pathfk/path_space.hpp"
#include "pathfk/regression.hpp"

namespace pathfk {

/// Driver f(path prefix, y, z) of the backward equation (scalar y).
struct Generator {
  std::string name;
  std::function<double(PathView, double, std::span<const double>)> evaluate;
  double lipschitz_y = 0.0;
  double lipschitz_z = 0.0;
  double growth_order = 0.0;

  double operator()(PathView prefix, double y, std::span<const double> z) const {
    return evaluate(prefix, y, z);
  }

  static Generator zero();
  /// f = rate(t) * y, with t the horizon of the prefix.
  static Generator linear(std::function<double(double)> rate, double rate_bound,
                          std::string name = "linear");
};

struct SolverOptions {
  /// One fixed-point correction y <- E[Y_{k+1}] + dt f(., y, Z_k) after the
  /// explicit step.
  bool implicit_correction = false;
  /// Regressions whose retained design has a larger condition number fail.
  double condition_limit = 1e12;
  Execution exec{};
};

struct PicardOptions {
  std::size_t max_iter = 50;
  double tol = 1e-10;
};

/// Discrete (Y, Z) on the simulation grid for every sample path.
struct BsdeSolution {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::size_t dimension = 1;

  double y_root = 0.0;
  double y_root_se = 0.0;
  /// n_paths x (steps + 1); column `steps` is the terminal value.
  Eigen::MatrixXd y_grid;
  /// n_paths x (steps * dimension); Z over [t_k, t_{k+1}) in columns
  /// k*d .. k*d + d - 1.
  Eigen::MatrixXd z_grid;
  /// Per-path Phi + sum_k f_k dt; their standard error is y_root_se.
  std::vector<double> root_samples;

  /// Standard error of the batch mean of Z, per step and component, from
  /// the spread of (Y_{k+1} - Yhat_k) dB_k / dt.
  std::vector<double> z_mean_se;
  std::vector<double> condition_numbers;  // per step, 1 at step 0
  std::size_t iterations = 0;             // Picard sweeps, 0 for regression
  std::vector<double> iteration_gaps;     // Picard successive-iterate gaps

  double z(std::size_t path, std::size_t step, std::size_t component = 0) const {
    return z_grid(static_cast<Eigen::Index>(path),
                  static_cast<Eigen::Index>(step * dimension + component));
  }
};

/// Explicit backward Euler with least-squares Monte-Carlo regression.
///
/// Y_N = Phi(spliced path); for k = N-1..0:
///   Yhat_k = E[Y_{k+1} | features_k]
///   Z_k    = E[(Y_{k+1} - Yhat_k) dB_k | features_k] / dt
/// where Z_k is fitted as the g(features_k) minimizing the squared error of
/// Y_{k+1} - Yhat_k - g dB_k (same conditional expectation, less variance).
///   Y_k    = Yhat_k + dt f(prefix_k, Yhat_k, Z_k)
/// At step 0 every path shares the prefix, so the conditional expectation
/// is the sample mean.
BsdeSolution solve_regression(const Functional& terminal, const Generator& f,
                              PathView prefix, const PathBatch& batch,
                              const RegressionBasis& basis, const SolverOptions& opts = {});
BsdeSolution solve_regression(const Functional& terminal, const Generator& f,
                              PathView prefix, const SimulationConfig& sim,
                              const RegressionBasis& basis, const SolverOptions& opts = {});

/// Raised when Picard iteration does not settle within max_iter sweeps.
class PicardNonConvergence : public SolverError {
 public:
  explicit PicardNonConvergence(BsdeSolution last);
  const BsdeSolution& last_iterate() const noexcept { return last_; }

 private:
  BsdeSolution last_;
};

/// Picard iteration on the integral form: given (Y^m, Z^m),
///   Y^{m+1}_k = E[Phi + sum_{j>=k} f(prefix_j, Y^m_j, Z^m_j) dt | features_k]
/// with Z^{m+1} from the same dB-projection. Stops once the largest per-step
/// RMS change of (Y, Z) drops below tol; `iterations` is the number of sweeps
/// after which the iterate stopped moving.
BsdeSolution solve_picard(const Functional& terminal, const Generator& f, PathView prefix,
                          const PathBatch& batch, const RegressionBasis& basis,
                          const PicardOptions& picard = {}, const SolverOptions& opts = {});

struct ComparisonReport {
  double y1 = 0.0;
  double y2 = 0.0;
  double difference = 0.0;  // y1 - y2
  double se = 0.0;          // paired standard error
  bool violation = false;   // y1 - y2 > 3 se
};

/// Solves both problems on the same batch and checks y1 <= y2.
ComparisonReport comparison_check(const Functional& terminal1, const Generator& f1,
                                  const Functional& terminal2, const Generator& f2,
                                  PathView prefix, const PathBatch& batch,
                                  const RegressionBasis& basis,
                                  const SolverOptions& opts = {});

struct MomentEstimate {
  double sup_y = 0.0;     // E[sup_s |Y(s)|^p]
  double z_energy = 0.0;  // E[(int |Z|^2 ds)^(p/2)]
  double sup_y_se = 0.0;
  double z_energy_se = 0.0;
};

MomentEstimate moment_estimate(const BsdeSolution& solution, double p);
MomentEstimate moment_estimate(const Functional& terminal, const Generator& f,
                               PathView prefix, const PathBatch& batch,
                               const RegressionBasis& basis, double p,
                               const SolverOptions& opts = {});

struct StabilityRow {
  double distance = 0.0;  // d_infinity of the pair
  double time_gap = 0.0;  // |t - tbar|
  double moment = 0.0;    // E[sup_u |Y_a(u) - Y_b(u)|^p]
  double moment_se = 0.0;
  double driver = 0.0;    // d_infinity^p + |t - tbar|^(p/2)
  double ratio = 0.0;     // moment / driver (0 when driver is 0)
};

struct StabilityConfig {
  double T = 1.0;
  std::size_t steps = 50;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
};

/// For each pair, solves both problems with common Brownian increments on
/// a grid anchored at the earlier horizon (the later horizon must be a grid
/// node) and estimates the p-th moment of the sup of the Y gap, with
/// Y(u) = Y(horizon) before the horizon.
std::vector<StabilityRow> stability_modulus(
    const Functional& terminal, const Generator& f,
    const std::vector<std::pair<CadlagPath, CadlagPath>>& pairs, const StabilityConfig& cfg,
    const RegressionBasis& basis, double p, const SolverOptions& opts = {});

/// `step,time,y_mean,y_se,z_mean_0..` with a `# schema=1` first line.
void write_solution_csv(std::ostream& out, const BsdeSolution& solution);
/// Condition numbers, iteration counts and root estimate as JSON.
void write_diagnostics(std::ostream& out, const BsdeSolution& solution);

/// Mean and standard error of a sample.
std::pair<double, double> mean_and_se(std::span<const double> samples);

}  // namespace pathfk
