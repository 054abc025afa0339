#pragma once

#include <cstdint>
#include <vector>

#include "pathfk/bsde.hpp"
#include "pathfk/functional_calculus.hpp"
#include "pathfk/oracles.hpp"

namespace pathfk {

/// Terminal functional and generator of the path-dependent PDE
///   D_t u + 1/2 tr D_xx u + f(path, u, D_x u) = 0,   u = Phi at T.
struct PpdeProblem {
  Functional terminal;
  Generator generator;
  double T = 1.0;
  std::size_t dimension = 1;
};

/// Monte-Carlo discretization used for every evaluation of u: `steps`
/// uniform steps from the horizon of the evaluated path to T.
struct MonteCarloSpec {
  std::size_t steps = 50;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
  bool antithetic = false;

  SimulationConfig at(double t, double T, std::size_t dimension) const;
};

/// Solution of the backward equation started from `path`.
/// Requires horizon < T.
BsdeSolution u_solution(const PpdeProblem& problem, PathView path, const MonteCarloSpec& mc,
                        const RegressionBasis& basis, const SolverOptions& opts = {});

/// u(path) = Y_path(t). At t = T returns Phi(path) with zero error.
Estimate u_eval(const PpdeProblem& problem, PathView path, const MonteCarloSpec& mc,
                const RegressionBasis& basis, const SolverOptions& opts = {});

/// u as a path functional (fixed seed, so bumped evaluations share noise).
Functional u_functional(PpdeProblem problem, MonteCarloSpec mc, RegressionBasis basis,
                        SolverOptions opts = {});

/// D_t u + 1/2 tr D_xx u + f(path, u, D_x u) from a derivative bundle.
double ppde_residual(const BundleSupplier& bundle, const PpdeProblem& problem, PathView path);

struct NumericResidual {
  double residual = 0.0;
  double se = 0.0;                    // Monte-Carlo standard error (paired)
  double fd_error = 0.0;              // change when (h, delta) are halved
  double discretization_error = 0.0;  // Richardson estimate from 2x steps
  double band = 0.0;                  // sqrt(se^2 + fd^2 + disc^2)
  DerivativeBundle bundle;
};

/// PPDE residual of the Monte-Carlo u. All evaluations share Brownian
/// increments (the horizontal one through a rescaled grid with the same
/// seed), so the per-path stencil combinations give a paired standard error.
NumericResidual numeric_ppde_residual(const PpdeProblem& problem, PathView path,
                                      const MonteCarloSpec& mc, const RegressionBasis& basis,
                                      double h, double delta, const SolverOptions& opts = {});

struct ZConsistencyOptions {
  std::size_t inner_paths = 0;     // 0: sqrt(outer paths)
  std::size_t checked_paths = 16;  // outer paths examined per time
  double h = 0.0;                  // 0: default vertical step
  std::size_t max_inner_solves = 100000;
};

struct ZConsistencyRow {
  double time = 0.0;
  std::size_t step = 0;
  std::size_t paths = 0;
  double z_regression = 0.0;  // mean over checked paths
  double z_derivative = 0.0;  // mean nested finite-difference D_x u
  double relative_error = 0.0;
  double se = 0.0;  // standard error of the mean difference
};

struct ZConsistencyReport {
  std::vector<ZConsistencyRow> rows;
  bool partial = false;  // inner budget ran out
};

/// Compares regression Z at the grid nodes nearest `times` with the vertical
/// derivative of u at the realized prefix, u evaluated by an inner
/// Monte-Carlo solve. Scalar paths only.
ZConsistencyReport z_consistency(const PpdeProblem& problem, PathView path,
                                 const MonteCarloSpec& mc, const RegressionBasis& basis,
                                 const std::vector<double>& times,
                                 const ZConsistencyOptions& zopt = {},
                                 const SolverOptions& opts = {});

/// The problem with Phi and f composed with freeze(., t, T, n); regression
/// features still see the unfrozen path.
PpdeProblem frozen_problem(const PpdeProblem& problem, double t, std::size_t n);

BsdeSolution frozen_solution(const PpdeProblem& problem, PathView path, std::size_t n,
                             const MonteCarloSpec& mc, const RegressionBasis& basis,
                             const SolverOptions& opts = {});
Estimate frozen_u(const PpdeProblem& problem, PathView path, std::size_t n,
                  const MonteCarloSpec& mc, const RegressionBasis& basis,
                  const SolverOptions& opts = {});

/// Difference of two solutions on the same batch with its paired SE.
Estimate paired_difference(const BsdeSolution& a, const BsdeSolution& b);

}  // namespace pathfk
