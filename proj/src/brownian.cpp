#include "pathfk/brownian.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "pathfk/error.hpp"

namespace pathfk {

void SimulationConfig::validate() const {
  if (grid.steps == 0) throw DomainError("simulation: zero steps");
  if (!(grid.dt() > 0.0)) throw DomainError("simulation: dt must be positive");
  if (n_paths == 0) throw DomainError("simulation: zero paths");
  if (dimension == 0) throw DomainError("simulation: zero dimension");
  if (antithetic && n_paths % 2 != 0)
    throw DomainError("simulation: antithetic sampling needs an even path count");
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index));
}

double GaussianStream::uniform_pm1() {
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

double GaussianStream::next() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = uniform_pm1();
    v = uniform_pm1();
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  cached_ = v * factor;
  has_cached_ = true;
  return u * factor;
}

PathBatch::PathBatch(SimulationConfig config, std::vector<double> increments)
    : config_(std::move(config)), increments_(std::move(increments)) {
  if (increments_.size() != config_.n_paths * stride())
    throw DomainError("PathBatch: increment count does not match config");
}

PathBatch PathBatch::drop_front(std::size_t k) const {
  if (k >= steps()) throw DomainError("drop_front: must keep at least one step");
  SimulationConfig cfg = config_;
  cfg.grid = TimeGrid(config_.grid.node(k), config_.grid.T, steps() - k);
  std::vector<double> inc;
  inc.reserve(n_paths() * cfg.grid.steps * dimension());
  for (std::size_t i = 0; i < n_paths(); ++i) {
    const auto tail = path(i).subspan(k * dimension());
    inc.insert(inc.end(), tail.begin(), tail.end());
  }
  return PathBatch(std::move(cfg), std::move(inc));
}

namespace {

void fill_path(const SimulationConfig& config, std::size_t i, std::span<double> out) {
  const double scale = std::sqrt(config.grid.dt());
  const std::size_t stream = config.antithetic ? i / 2 : i;
  const double sign = (config.antithetic && i % 2 == 1) ? -1.0 : 1.0;
  GaussianStream g(stream_seed(config.seed, stream));
  for (double& v : out) v = sign * scale * g.next();
}

PathBatch simulate_with(const SimulationConfig& config, const Execution& exec) {
  config.validate();
  const std::size_t stride = config.grid.steps * config.dimension;
  std::vector<double> inc(config.n_paths * stride);
  parallel_for(config.n_paths, exec, [&](std::size_t i) {
    fill_path(config, i, std::span<double>(inc).subspan(i * stride, stride));
  });
  return PathBatch(config, std::move(inc));
}

}  // namespace

PathBatch simulate(const SimulationConfig& config, const Execution& exec) {
  return simulate_with(config, exec);
}

PathBatch simulate_serial(const SimulationConfig& config) {
  return simulate_with(config, Execution::serial_reference());
}

std::vector<CadlagPath> cumulate(const PathBatch& batch, PathView prefix) {
  if (prefix.dimension() != batch.dimension())
    throw DomainError("cumulate: dimension mismatch");
  std::vector<CadlagPath> out;
  out.reserve(batch.n_paths());
  for (std::size_t i = 0; i < batch.n_paths(); ++i)
    out.push_back(splice_brownian(prefix, batch.grid(), batch.path(i)));
  return out;
}

void write_batch_csv(std::ostream& out, const PathBatch& batch) {
  out << "path,step,time";
  for (std::size_t j = 0; j < batch.dimension(); ++j) out << ",dB_" << j;
  out << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < batch.n_paths(); ++i) {
    for (std::size_t k = 0; k < batch.steps(); ++k) {
      out << i << ',' << k << ',' << batch.grid().node(k);
      for (double v : batch.increment(i, k)) out << ',' << v;
      out << '\n';
    }
  }
}

}  // namespace pathfk
