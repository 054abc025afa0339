#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "pathfk/parallel.hpp"
#include "pathfk/path_space.hpp"

namespace pathfk {

struct SimulationConfig {
  TimeGrid grid;
  std::size_t dimension = 1;
  std::size_t n_paths = 1;
  std::uint64_t seed = 0;
  bool antithetic = false;

  /// Throws DomainError when the config cannot be simulated.
  void validate() const;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the random stream owned by stream `index` under `seed`:
/// mix64(seed ^ mix64(index)). Each stream drives its own mt19937_64.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// Standard normal variates by the Marsaglia polar method on top of
/// mt19937_64. Uniforms are the top 53 bits of each 64-bit output, and the
/// second variate of each accepted pair is cached and returned next.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform_pm1();
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Brownian increments, n_paths x steps x dimension, row-major.
///
/// Path i is filled from stream i (or stream i/2 negated for the odd member
/// of an antithetic pair), so the batch does not depend on how paths are
/// scheduled across threads.
class PathBatch {
 public:
  PathBatch(SimulationConfig config, std::vector<double> increments);

  const SimulationConfig& config() const noexcept { return config_; }
  const TimeGrid& grid() const noexcept { return config_.grid; }
  std::size_t n_paths() const noexcept { return config_.n_paths; }
  std::size_t steps() const noexcept { return config_.grid.steps; }
  std::size_t dimension() const noexcept { return config_.dimension; }

  std::span<const double> increments() const noexcept { return increments_; }
  /// All increments of one path, steps x dimension.
  std::span<const double> path(std::size_t i) const noexcept {
    return std::span<const double>(increments_).subspan(i * stride(), stride());
  }
  /// The increment of one path over [t_k, t_{k+1}].
  std::span<const double> increment(std::size_t i, std::size_t k) const noexcept {
    return path(i).subspan(k * dimension(), dimension());
  }

  /// The same Brownian increments restricted to the grid [t_k, T].
  PathBatch drop_front(std::size_t k) const;

  bool operator==(const PathBatch& other) const { return increments_ == other.increments_; }

 private:
  std::size_t stride() const noexcept { return config_.grid.steps * config_.dimension; }
  SimulationConfig config_;
  std::vector<double> increments_;
};

PathBatch simulate(const SimulationConfig& config, const Execution& exec = {});
/// Single-threaded reference for `simulate`.
PathBatch simulate_serial(const SimulationConfig& config);

/// Splices every path of the batch onto `prefix`.
std::vector<CadlagPath> cumulate(const PathBatch& batch, PathView prefix);

/// One CSV row per path-step: `path,step,time,dB_0..`.
void write_batch_csv(std::ostream& out, const PathBatch& batch);

}  // namespace pathfk
