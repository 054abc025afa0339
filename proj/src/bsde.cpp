#include "pathfk/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>

#include "pathfk/error.hpp"

namespace pathfk {

Generator Generator::zero() {
  return Generator{"zero", [](PathView, double, std::span<const double>) { return 0.0; }, 0.0,
                   0.0, 0.0};
}

Generator Generator::linear(std::function<double(double)> rate, double rate_bound,
                            std::string name) {
  return Generator{std::move(name),
                   [rate = std::move(rate)](PathView p, double y, std::span<const double>) {
                     return rate(p.horizon()) * y;
                   },
                   rate_bound, 0.0, 1.0};
}

std::pair<double, double> mean_and_se(std::span<const double> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

namespace {

// Spliced sample paths plus the per-step regression machinery shared by the
// two schemes.
class BackwardProblem {
 public:
  BackwardProblem(PathView prefix, const PathBatch& batch, const RegressionBasis& basis,
                  const SolverOptions& opts)
      : batch_(batch), opts_(opts), n_(batch.n_paths()), steps_(batch.steps()),
        d_(batch.dimension()), m0_(prefix.size()) {
    basis.validate();
    if (prefix.dimension() != batch.dimension())
      throw DomainError("solver: prefix and batch dimensions differ");
    if (std::abs(batch.grid().t0 - prefix.horizon()) >
        kTimeTolerance * std::max(1.0, batch.grid().T))
      throw DomainError("solver: simulation grid does not start at the prefix horizon");
    paths_.resize(n_);
    parallel_for(n_, opts_.exec, [&](std::size_t i) {
      paths_[i] = splice_brownian(prefix, batch.grid(), batch.path(i));
    });
    exponents_ = basis.exponents();
    basis_ = &basis;
  }

  std::size_t n() const { return n_; }
  std::size_t steps() const { return steps_; }
  std::size_t dim() const { return d_; }
  double dt() const { return batch_.grid().dt(); }

  PathView prefix(std::size_t i, std::size_t k) const { return paths_[i].view().head(m0_ + k); }
  PathView full(std::size_t i) const { return paths_[i].view(); }
  double increment(std::size_t i, std::size_t k, std::size_t j) const {
    return batch_.increment(i, k)[j];
  }

  Eigen::VectorXd terminal_values(const Functional& terminal) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n_));
    parallel_for(n_, opts_.exec, [&](std::size_t i) {
      y[static_cast<Eigen::Index>(i)] = terminal(full(i));
    });
    for (std::size_t i = 0; i < n_; ++i) {
      if (!std::isfinite(y[static_cast<Eigen::Index>(i)]))
        throw NonFiniteError("terminal functional " + terminal.name, i);
    }
    return y;
  }

  // Projection at step k >= 1; step 0 is the sample mean.
  std::unique_ptr<LeastSquaresProjection> projection(std::size_t k) const {
    const std::size_t nf = basis_->features.size();
    const std::size_t nm = exponents_.size();
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(nm - 1));
    parallel_for(n_, opts_.exec, [&](std::size_t i) {
      const PathView p = prefix(i, k);
      std::vector<double> raw(nf);
      std::vector<double> row(nm);
      for (std::size_t j = 0; j < nf; ++j) raw[j] = basis_->features[j].evaluate(p);
      RegressionBasis::expand(exponents_, raw, row);
      for (std::size_t c = 1; c < nm; ++c)
        design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c - 1)) = row[c];
    });
    auto proj = std::make_unique<LeastSquaresProjection>(design);
    if (!(proj->condition() <= opts_.condition_limit))
      throw SingularRegressionError(k, proj->condition());
    return proj;
  }

  // E[target | features_k].
  Eigen::VectorXd conditional(const LeastSquaresProjection* proj,
                              const Eigen::VectorXd& target) const {
    if (proj == nullptr) return Eigen::VectorXd::Constant(target.size(), target.mean());
    return proj->fit(target);
  }

  // E[(next - E[next | F_k]) dB_k | F_k] / dt, one column per component,
  // estimated as the g minimizing sum_i (next_i - next_hat_i - dB_i g(x_i))^2.
  // z_se is the standard error of the plain moment estimator
  // mean((next - next_hat) dB) / dt of the same batch mean.
  void z_estimate(const LeastSquaresProjection* proj, std::size_t k,
                  const Eigen::VectorXd& next, const Eigen::VectorXd& next_hat,
                  Eigen::MatrixXd& z_grid, std::vector<double>& z_se) const {
    const Eigen::VectorXd resid = next - next_hat;
    Eigen::VectorXd w(static_cast<Eigen::Index>(n_));
    std::vector<double> moment(n_);
    for (std::size_t j = 0; j < d_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        w[r] = increment(i, k, j);
        moment[i] = resid[r] * w[r] / dt();
      }
      const auto col = static_cast<Eigen::Index>(k * d_ + j);
      if (proj == nullptr) {
        const double w2 = w.squaredNorm();
        z_grid.col(col).setConstant(w2 > 0.0 ? resid.dot(w) / w2 : 0.0);
      } else {
        z_grid.col(col) = proj->fit_scaled(resid, w).g;
      }
      z_se[k * d_ + j] = mean_and_se(moment).second;
    }
  }

  BsdeSolution empty_solution() const {
    BsdeSolution s;
    s.grid = batch_.grid();
    s.n_paths = n_;
    s.dimension = d_;
    s.y_grid.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(steps_ + 1));
    s.z_grid.setZero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(steps_ * d_));
    s.condition_numbers.assign(steps_, 1.0);
    s.z_mean_se.assign(steps_ * d_, 0.0);
    return s;
  }

  const SolverOptions& options() const { return opts_; }

 private:
  const PathBatch& batch_;
  SolverOptions opts_;
  std::size_t n_;
  std::size_t steps_;
  std::size_t d_;
  std::size_t m0_;
  std::vector<CadlagPath> paths_;
  std::vector<std::vector<int>> exponents_;
  const RegressionBasis* basis_ = nullptr;
};

std::span<const double> z_row(const Eigen::MatrixXd& z_grid, std::size_t i, std::size_t k,
                              std::size_t d, std::vector<double>& scratch) {
  for (std::size_t j = 0; j < d; ++j)
    scratch[j] = z_grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k * d + j));
  return scratch;
}

void finish_root(BsdeSolution& s) {
  const auto [mean, se] = mean_and_se(s.root_samples);
  (void)mean;
  s.y_root = s.y_grid(0, 0);
  s.y_root_se = se;
}

}  // namespace

BsdeSolution solve_regression(const Functional& terminal, const Generator& f,
                              PathView prefix, const PathBatch& batch,
                              const RegressionBasis& basis, const SolverOptions& opts) {
  BackwardProblem bp(prefix, batch, basis, opts);
  const std::size_t n = bp.n();
  const std::size_t d = bp.dim();
  const double dt = bp.dt();
  BsdeSolution s = bp.empty_solution();

  const Eigen::VectorXd phi = bp.terminal_values(terminal);
  s.y_grid.col(static_cast<Eigen::Index>(bp.steps())) = phi;
  std::vector<double> driver_sum(n, 0.0);
  std::vector<double> f_vals(n);

  for (std::size_t kk = bp.steps(); kk-- > 0;) {
    const std::size_t k = kk;
    std::unique_ptr<LeastSquaresProjection> proj;
    if (k > 0) {
      proj = bp.projection(k);
      s.condition_numbers[k] = proj->condition();
    }
    const Eigen::VectorXd next = s.y_grid.col(static_cast<Eigen::Index>(k + 1));
    const Eigen::VectorXd yhat = bp.conditional(proj.get(), next);
    bp.z_estimate(proj.get(), k, next, yhat, s.z_grid, s.z_mean_se);

    parallel_for(n, opts.exec, [&](std::size_t i) {
      std::vector<double> zs(d);
      const auto z = z_row(s.z_grid, i, k, d, zs);
      const PathView p = bp.prefix(i, k);
      const double y0 = yhat[static_cast<Eigen::Index>(i)];
      double fv = f(p, y0, z);
      double y = y0 + dt * fv;
      if (opts.implicit_correction) {
        fv = f(p, y, z);
        y = y0 + dt * fv;
      }
      f_vals[i] = fv;
      s.y_grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = y;
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(f_vals[i])) throw NonFiniteError("generator " + f.name, i);
      driver_sum[i] += f_vals[i] * dt;
    }
  }

  s.root_samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.root_samples[i] = phi[static_cast<Eigen::Index>(i)] + driver_sum[i];
  finish_root(s);
  return s;
}

BsdeSolution solve_regression(const Functional& terminal, const Generator& f,
                              PathView prefix, const SimulationConfig& sim,
                              const RegressionBasis& basis, const SolverOptions& opts) {
  const PathBatch batch = simulate(sim, opts.exec);
  return solve_regression(terminal, f, prefix, batch, basis, opts);
}

PicardNonConvergence::PicardNonConvergence(BsdeSolution last)
    : SolverError("Picard iteration did not converge after " +
                  std::to_string(last.iterations) + " sweeps (last gap " +
                  std::to_string(last.iteration_gaps.empty() ? 0.0
                                                             : last.iteration_gaps.back()) +
                  ")"),
      last_(std::move(last)) {}

BsdeSolution solve_picard(const Functional& terminal, const Generator& f, PathView prefix,
                          const PathBatch& batch, const RegressionBasis& basis,
                          const PicardOptions& picard, const SolverOptions& opts) {
  BackwardProblem bp(prefix, batch, basis, opts);
  const std::size_t n = bp.n();
  const std::size_t d = bp.dim();
  const std::size_t steps = bp.steps();
  const double dt = bp.dt();

  std::vector<std::unique_ptr<LeastSquaresProjection>> proj(steps);
  BsdeSolution s = bp.empty_solution();
  for (std::size_t k = 1; k < steps; ++k) {
    proj[k] = bp.projection(k);
    s.condition_numbers[k] = proj[k]->condition();
  }

  const Eigen::VectorXd phi = bp.terminal_values(terminal);
  s.y_grid.setZero();
  s.y_grid.col(static_cast<Eigen::Index>(steps)) = phi;

  Eigen::MatrixXd drivers(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(steps));
  Eigen::MatrixXd y_next(s.y_grid.rows(), s.y_grid.cols());
  Eigen::MatrixXd z_next(s.z_grid.rows(), s.z_grid.cols());
  Eigen::VectorXd target = phi;

  for (std::size_t m = 0; m < picard.max_iter; ++m) {
    parallel_for(n, opts.exec, [&](std::size_t i) {
      std::vector<double> zs(d);
      for (std::size_t k = 0; k < steps; ++k) {
        drivers(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            f(bp.prefix(i, k),
              s.y_grid(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
              z_row(s.z_grid, i, k, d, zs));
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < steps; ++k) {
        if (!std::isfinite(drivers(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))))
          throw NonFiniteError("generator " + f.name, i);
      }
    }

    y_next.col(static_cast<Eigen::Index>(steps)) = phi;
    target = phi;
    for (std::size_t kk = steps; kk-- > 0;) {
      const std::size_t k = kk;
      const Eigen::VectorXd later = target;
      const Eigen::VectorXd later_hat = bp.conditional(proj[k].get(), later);
      bp.z_estimate(proj[k].get(), k, later, later_hat, z_next, s.z_mean_se);
      target = later + dt * drivers.col(static_cast<Eigen::Index>(k));
      y_next.col(static_cast<Eigen::Index>(k)) = bp.conditional(proj[k].get(), target);
    }

    double gap = 0.0;
    const double rn = static_cast<double>(n);
    for (Eigen::Index c = 0; c < y_next.cols(); ++c)
      gap = std::max(gap, std::sqrt((y_next.col(c) - s.y_grid.col(c)).squaredNorm() / rn));
    for (Eigen::Index c = 0; c < z_next.cols(); ++c)
      gap = std::max(gap, std::sqrt((z_next.col(c) - s.z_grid.col(c)).squaredNorm() / rn));

    s.y_grid = y_next;
    s.z_grid = z_next;
    s.iteration_gaps.push_back(gap);
    s.root_samples.assign(target.data(), target.data() + n);
    if (gap < picard.tol) {
      s.iterations = m;
      finish_root(s);
      return s;
    }
    s.iterations = m + 1;
  }
  finish_root(s);
  throw PicardNonConvergence(std::move(s));
}

ComparisonReport comparison_check(const Functional& terminal1, const Generator& f1,
                                  const Functional& terminal2, const Generator& f2,
                                  PathView prefix, const PathBatch& batch,
                                  const RegressionBasis& basis, const SolverOptions& opts) {
  const BsdeSolution a = solve_regression(terminal1, f1, prefix, batch, basis, opts);
  const BsdeSolution b = solve_regression(terminal2, f2, prefix, batch, basis, opts);
  std::vector<double> diff(a.root_samples.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.root_samples[i] - b.root_samples[i];
  ComparisonReport r;
  r.y1 = a.y_root;
  r.y2 = b.y_root;
  r.difference = a.y_root - b.y_root;
  r.se = mean_and_se(diff).second;
  // Rounding slack so that identical or shifted inputs never flag.
  const double slack = 1e-12 * (1.0 + std::abs(r.y1) + std::abs(r.y2));
  r.violation = r.difference > 3.0 * r.se + slack;
  return r;
}

MomentEstimate moment_estimate(const BsdeSolution& s, double p) {
  if (p < 2.0) throw DomainError("moment_estimate: p must be at least 2");
  const double dt = s.grid.dt();
  std::vector<double> sup_y(s.n_paths);
  std::vector<double> energy(s.n_paths);
  for (std::size_t i = 0; i < s.n_paths; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    sup_y[i] = std::pow(s.y_grid.row(row).cwiseAbs().maxCoeff(), p);
    energy[i] = std::pow(s.z_grid.row(row).squaredNorm() * dt, 0.5 * p);
  }
  MomentEstimate m;
  std::tie(m.sup_y, m.sup_y_se) = mean_and_se(sup_y);
  std::tie(m.z_energy, m.z_energy_se) = mean_and_se(energy);
  return m;
}

MomentEstimate moment_estimate(const Functional& terminal, const Generator& f,
                               PathView prefix, const PathBatch& batch,
                               const RegressionBasis& basis, double p,
                               const SolverOptions& opts) {
  if (p < 2.0) throw DomainError("moment_estimate: p must be at least 2");
  return moment_estimate(solve_regression(terminal, f, prefix, batch, basis, opts), p);
}

std::vector<StabilityRow> stability_modulus(
    const Functional& terminal, const Generator& f,
    const std::vector<std::pair<CadlagPath, CadlagPath>>& pairs, const StabilityConfig& cfg,
    const RegressionBasis& basis, double p, const SolverOptions& opts) {
  if (p < 2.0) throw DomainError("stability_modulus: p must be at least 2");
  std::vector<StabilityRow> rows;
  for (const auto& [first, second] : pairs) {
    PathView a = first.view();
    PathView b = second.view();
    if (a.horizon() > b.horizon()) std::swap(a, b);
    SimulationConfig sim{TimeGrid(a.horizon(), cfg.T, cfg.steps), a.dimension(), cfg.n_paths,
                         cfg.seed, false};
    const PathBatch batch = simulate(sim, opts.exec);
    const long lag = sim.grid.index_of(b.horizon());
    if (lag < 0 || static_cast<std::size_t>(lag) >= cfg.steps)
      throw DomainError("stability_modulus: later horizon is not an interior grid node");
    const auto k0 = static_cast<std::size_t>(lag);

    const BsdeSolution sa = solve_regression(terminal, f, a, batch, basis, opts);
    const BsdeSolution sb = k0 == 0
                                ? solve_regression(terminal, f, b, batch, basis, opts)
                                : solve_regression(terminal, f, b, batch.drop_front(k0), basis,
                                                   opts);
    std::vector<double> sup_gap(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      double m = 0.0;
      for (std::size_t k = 0; k <= cfg.steps; ++k) {
        const std::size_t kb = k < k0 ? 0 : k - k0;
        m = std::max(m, std::abs(sa.y_grid(row, static_cast<Eigen::Index>(k)) -
                                 sb.y_grid(row, static_cast<Eigen::Index>(kb))));
      }
      sup_gap[i] = std::pow(m, p);
    }
    StabilityRow r;
    r.distance = d_infinity(a, b);
    r.time_gap = b.horizon() - a.horizon();
    std::tie(r.moment, r.moment_se) = mean_and_se(sup_gap);
    r.driver = std::pow(r.distance, p) + std::pow(r.time_gap, 0.5 * p);
    r.ratio = r.driver > 0.0 ? r.moment / r.driver : 0.0;
    rows.push_back(r);
  }
  return rows;
}

void write_solution_csv(std::ostream& out, const BsdeSolution& s) {
  out << "# schema=1\nstep,time,y_mean,y_se";
  for (std::size_t j = 0; j < s.dimension; ++j) out << ",z_mean_" << j;
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k <= s.grid.steps; ++k) {
    const Eigen::VectorXd col = s.y_grid.col(static_cast<Eigen::Index>(k));
    std::vector<double> v(col.data(), col.data() + col.size());
    const auto [mean, se] = mean_and_se(v);
    out << k << ',' << s.grid.node(k) << ',' << mean << ',' << se;
    for (std::size_t j = 0; j < s.dimension; ++j) {
      if (k < s.grid.steps)
        out << ',' << s.z_grid.col(static_cast<Eigen::Index>(k * s.dimension + j)).mean();
      else
        out << ',';
    }
    out << '\n';
  }
}

void write_diagnostics(std::ostream& out, const BsdeSolution& s) {
  nlohmann::json j;
  j["y_root"] = s.y_root;
  j["y_root_se"] = s.y_root_se;
  j["n_paths"] = s.n_paths;
  j["steps"] = s.grid.steps;
  j["condition_numbers"] = s.condition_numbers;
  j["max_condition_number"] =
      *std::max_element(s.condition_numbers.begin(), s.condition_numbers.end());
  j["iterations"] = s.iterations;
  j["iteration_gaps"] = s.iteration_gaps;
  out << j.dump(2) << '\n';
}

}  // namespace pathfk
