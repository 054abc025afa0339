#include "pathfk/ppde.hpp"

#include <algorithm>
#include <cmath>

#include "pathfk/error.hpp"

namespace pathfk {

SimulationConfig MonteCarloSpec::at(double t, double T, std::size_t dimension) const {
  return SimulationConfig{TimeGrid(t, T, steps), dimension, n_paths, seed, antithetic};
}

namespace {

bool at_terminal(PathView path, double T) {
  return path.horizon() >= T - kTimeTolerance * std::max(1.0, T);
}

std::vector<double> paired(const BsdeSolution& a, const BsdeSolution& b) {
  std::vector<double> d(a.root_samples.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.root_samples[i] - b.root_samples[i];
  return d;
}

}  // namespace

BsdeSolution u_solution(const PpdeProblem& problem, PathView path, const MonteCarloSpec& mc,
                        const RegressionBasis& basis, const SolverOptions& opts) {
  if (at_terminal(path, problem.T))
    throw DomainError("u_solution: path horizon must precede T");
  return solve_regression(problem.terminal, problem.generator, path,
                          mc.at(path.horizon(), problem.T, path.dimension()), basis, opts);
}

Estimate u_eval(const PpdeProblem& problem, PathView path, const MonteCarloSpec& mc,
                const RegressionBasis& basis, const SolverOptions& opts) {
  if (path.horizon() > problem.T + kTimeTolerance * std::max(1.0, problem.T))
    throw DomainError("u_eval: path horizon exceeds T");
  if (at_terminal(path, problem.T)) return {problem.terminal(path), 0.0};
  const BsdeSolution s = u_solution(problem, path, mc, basis, opts);
  return {s.y_root, s.y_root_se};
}

Functional u_functional(PpdeProblem problem, MonteCarloSpec mc, RegressionBasis basis,
                        SolverOptions opts) {
  const std::string name = "u[" + problem.terminal.name + "]";
  const double q = problem.terminal.growth_order;
  return Functional{name,
                    [problem = std::move(problem), mc, basis = std::move(basis),
                     opts](PathView p) { return u_eval(problem, p, mc, basis, opts).value; },
                    q, 1.0};
}

double ppde_residual(const BundleSupplier& bundle, const PpdeProblem& problem, PathView path) {
  const DerivativeBundle b = bundle(path);
  std::vector<double> z(b.vertical.data(), b.vertical.data() + b.vertical.size());
  return b.horizontal + 0.5 * b.hessian.trace() + problem.generator(path, b.value, z);
}

namespace {

struct StencilResult {
  double residual = 0.0;
  std::vector<double> samples;
  DerivativeBundle bundle;
};

StencilResult stencil_residual(const PpdeProblem& problem, PathView path,
                               const MonteCarloSpec& mc, const RegressionBasis& basis, double h,
                               double delta, const SolverOptions& opts) {
  const std::size_t d = path.dimension();
  const double t = path.horizon();
  const PathBatch batch = simulate(mc.at(t, problem.T, d), opts.exec);
  const PathBatch batch_ext = simulate(mc.at(t + delta, problem.T, d), opts.exec);
  auto solve = [&](PathView p, const PathBatch& b) {
    return solve_regression(problem.terminal, problem.generator, p, b, basis, opts);
  };

  const BsdeSolution centre = solve(path, batch);
  const BsdeSolution ext = solve(horizontal_extension(path, t + delta), batch_ext);
  const std::size_t n = centre.root_samples.size();

  StencilResult out;
  out.bundle.value = centre.y_root;
  out.bundle.vertical = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  out.bundle.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                             static_cast<Eigen::Index>(d));
  out.bundle.horizontal = (ext.y_root - centre.y_root) / delta;
  out.bundle.step_vertical = h;
  out.bundle.step_horizontal = delta;

  std::vector<double> second(n, 0.0);
  std::vector<std::vector<double>> grad(n, std::vector<double>(d, 0.0));
  std::vector<double> x(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    x[j] = h;
    const BsdeSolution up = solve(vertical_bump(path, x), batch);
    x[j] = -h;
    const BsdeSolution down = solve(vertical_bump(path, x), batch);
    x[j] = 0.0;
    const auto jj = static_cast<Eigen::Index>(j);
    out.bundle.vertical[jj] = (up.y_root - down.y_root) / (2.0 * h);
    out.bundle.hessian(jj, jj) = (up.y_root - 2.0 * centre.y_root + down.y_root) / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
      grad[i][j] = (up.root_samples[i] - down.root_samples[i]) / (2.0 * h);
      second[i] += (up.root_samples[i] - 2.0 * centre.root_samples[i] + down.root_samples[i]) /
                   (h * h);
    }
  }
  std::vector<double> zs(out.bundle.vertical.data(),
                         out.bundle.vertical.data() + out.bundle.vertical.size());
  out.residual = out.bundle.horizontal + 0.5 * out.bundle.hessian.trace() +
                 problem.generator(path, out.bundle.value, zs);

  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = (ext.root_samples[i] - centre.root_samples[i]) / delta + 0.5 * second[i] +
                     problem.generator(path, centre.root_samples[i], grad[i]);
  }
  return out;
}

}  // namespace

NumericResidual numeric_ppde_residual(const PpdeProblem& problem, PathView path,
                                      const MonteCarloSpec& mc, const RegressionBasis& basis,
                                      double h, double delta, const SolverOptions& opts) {
  if (!(h > 0.0) || !(delta > 0.0)) throw DomainError("numeric residual: steps must be positive");
  if (path.horizon() + delta > problem.T) throw DomainError("numeric residual: t + delta > T");

  const StencilResult base = stencil_residual(problem, path, mc, basis, h, delta, opts);
  const StencilResult half = stencil_residual(problem, path, mc, basis, 0.5 * h, 0.5 * delta, opts);
  MonteCarloSpec fine = mc;
  fine.steps = 2 * mc.steps;
  const StencilResult refined = stencil_residual(problem, path, fine, basis, h, delta, opts);

  NumericResidual r;
  r.residual = base.residual;
  r.se = mean_and_se(base.samples).second;
  r.fd_error = std::abs(base.residual - half.residual);
  // First-order time discretization: the bias of the coarse run is about
  // twice the coarse/fine gap.
  r.discretization_error = 2.0 * std::abs(base.residual - refined.residual);
  r.band = std::sqrt(r.se * r.se + r.fd_error * r.fd_error +
                     r.discretization_error * r.discretization_error);
  r.bundle = base.bundle;
  return r;
}

ZConsistencyReport z_consistency(const PpdeProblem& problem, PathView path,
                                 const MonteCarloSpec& mc, const RegressionBasis& basis,
                                 const std::vector<double>& times,
                                 const ZConsistencyOptions& zopt, const SolverOptions& opts) {
  if (path.dimension() != 1) throw DomainError("z_consistency: scalar paths only");
  const double t = path.horizon();
  const SimulationConfig sim = mc.at(t, problem.T, 1);
  const PathBatch batch = simulate(sim, opts.exec);
  const BsdeSolution outer =
      solve_regression(problem.terminal, problem.generator, path, batch, basis, opts);

  const std::size_t inner_paths =
      zopt.inner_paths > 0
          ? zopt.inner_paths
          : std::max<std::size_t>(2, static_cast<std::size_t>(
                                         std::lround(std::sqrt(static_cast<double>(mc.n_paths)))));
  const std::size_t checked = std::min(zopt.checked_paths, mc.n_paths);

  ZConsistencyReport report;
  std::size_t solves = 0;
  for (double s : times) {
    if (s < t || s >= problem.T) throw DomainError("z_consistency: time outside [t, T)");
    const auto k = std::min<std::size_t>(
        sim.grid.steps - 1,
        static_cast<std::size_t>(std::lround((s - t) / sim.grid.dt())));
    MonteCarloSpec inner{sim.grid.steps - k, inner_paths, stream_seed(mc.seed, 1 + k), false};

    std::vector<double> diff;
    double z_sum = 0.0;
    double d_sum = 0.0;
    double d_sq = 0.0;
    double diff_sq = 0.0;
    for (std::size_t j = 0; j < checked; ++j) {
      if (solves + 2 > zopt.max_inner_solves) {
        report.partial = true;
        break;
      }
      const CadlagPath spliced = splice_brownian(path, sim.grid, batch.path(j));
      const PathView pv = spliced.view().head(path.size() + k);
      const CadlagPath prefix(std::vector<double>(pv.times().begin(), pv.times().end()),
                              std::vector<double>(pv.values().begin(), pv.values().end()), 1);
      const double h = zopt.h > 0.0 ? zopt.h : default_vertical_step(prefix);
      const double up = u_eval(problem, vertical_bump(prefix, h), inner, basis, opts).value;
      const double down = u_eval(problem, vertical_bump(prefix, -h), inner, basis, opts).value;
      solves += 2;
      const double dxu = (up - down) / (2.0 * h);
      const double zr = outer.z(j, k);
      diff.push_back(zr - dxu);
      z_sum += zr;
      d_sum += dxu;
      d_sq += dxu * dxu;
      diff_sq += (zr - dxu) * (zr - dxu);
    }
    if (diff.empty()) break;
    const auto m = static_cast<double>(diff.size());
    ZConsistencyRow row;
    row.time = sim.grid.node(k);
    row.step = k;
    row.paths = diff.size();
    row.z_regression = z_sum / m;
    row.z_derivative = d_sum / m;
    row.relative_error = d_sq > 0.0 ? std::sqrt(diff_sq / d_sq) : std::sqrt(diff_sq / m);
    // Spread across the checked paths plus the regression's own error.
    row.se = std::hypot(mean_and_se(diff).second, outer.z_mean_se[k]);
    report.rows.push_back(row);
    if (report.partial) break;
  }
  return report;
}

PpdeProblem frozen_problem(const PpdeProblem& problem, double t, std::size_t n) {
  if (n == 0) throw DomainError("frozen_problem: n must be positive");
  PpdeProblem out = problem;
  const double T = problem.T;
  out.terminal.name = problem.terminal.name + "/freeze" + std::to_string(n);
  out.terminal.evaluate = [phi = problem.terminal, t, T, n](PathView p) {
    return phi(freeze(p, t, T, n));
  };
  out.generator.name = problem.generator.name + "/freeze" + std::to_string(n);
  out.generator.evaluate = [f = problem.generator, t, T, n](PathView p, double y,
                                                            std::span<const double> z) {
    return f(freeze(p, t, T, n), y, z);
  };
  return out;
}

BsdeSolution frozen_solution(const PpdeProblem& problem, PathView path, std::size_t n,
                             const MonteCarloSpec& mc, const RegressionBasis& basis,
                             const SolverOptions& opts) {
  return u_solution(frozen_problem(problem, path.horizon(), n), path, mc, basis, opts);
}

Estimate frozen_u(const PpdeProblem& problem, PathView path, std::size_t n,
                  const MonteCarloSpec& mc, const RegressionBasis& basis,
                  const SolverOptions& opts) {
  const PpdeProblem frozen = frozen_problem(problem, path.horizon(), n);
  return u_eval(frozen, path, mc, basis, opts);
}

Estimate paired_difference(const BsdeSolution& a, const BsdeSolution& b) {
  const auto d = paired(a, b);
  return {a.y_root - b.y_root, mean_and_se(d).second};
}

}  // namespace pathfk
