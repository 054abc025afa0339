#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathfk/parallel.hpp"
#include "pathfk/path_space.hpp"

namespace pathfk::cli {

/// Process exit codes of the `pathfk` tool.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,            // bad flags or unreadable/invalid config
  kUnknownKind = 3,      // experiment kind not recognized
  kUnknownFixture = 4,   // fixture id not in the catalog
  kSolverFailure = 5,    // numerical failure (singular regression, NaN, ...)
  kIoFailure = 6,        // output directory or files not writable
  kVerificationFailed = 7,  // ran to completion, some verdict is FAIL
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownExperiment : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string kind;
  std::string fixture;

  // Starting path: constant x0 on [0, t], or read from prefix_csv.
  double t = 0.0;
  double x0 = 0.0;
  std::string prefix_csv;

  std::size_t steps = 50;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 0;
  bool antithetic = false;
  int degree = 2;

  double h = 0.0;      // 0 selects the default step
  double delta = 0.0;  // 0 selects the default step

  std::vector<std::size_t> levels{1, 2, 4, 8};

  // Experiment-specific knobs.
  std::size_t samples = 20;  // random paths (verify-ppde), pairs (compare), paths (verify-ito)
  std::vector<double> times{0.2, 0.35, 0.5, 0.65, 0.8};
  std::vector<std::size_t> steps_list{32, 64, 128, 256};
  std::string quadratic_variation = "brownian";
  bool nested = false;
  bool picard = false;  // also solve by Picard iteration and compare
  std::size_t checked_paths = 16;
  double rel_tol = 0.0;
  double z_tol = 0.05;
  double residual_tol = 1e-3;
  double slope_min = 0.4;
  double se_max = 0.0;  // 0 disables the standard-error bound
  std::size_t cascade_stride = 20;

  std::filesystem::path out_dir = "out";
  int threads = 0;
  bool export_batch = false;

  /// Canonical `key = value` text; its hash identifies the run.
  std::string canonical() const;
  Execution execution() const;
  /// Throws ConfigError / UnknownExperiment / UnknownFixture.
  void validate() const;
};

/// INI text with sections [experiment], [path], [grid], [simulation],
/// [regression], [fd], [freeze], [verify], [output].
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

const std::vector<std::string>& experiment_kinds();

/// One verdict-carrying row of results.csv.
struct ResultRow {
  std::string fixture;
  std::string metric;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  /// within: |value - reference| <= tolerance; at_most: value <= tolerance;
  /// at_least: value >= tolerance; info: no verdict.
  std::string rule = "within";
  bool pass = true;
};

struct DiagnosticRow {
  std::string fixture;
  std::string key;
  double value = 0.0;
};

struct RunReport {
  std::string kind;
  std::uint64_t seed = 0;
  std::vector<ResultRow> rows;
  std::vector<DiagnosticRow> diagnostics;
  bool passed() const;
};

ResultRow within(std::string fixture, std::string metric, double value, double reference,
                 double tolerance);
ResultRow at_most(std::string fixture, std::string metric, double value, double bound);
ResultRow at_least(std::string fixture, std::string metric, double value, double bound);
ResultRow info(std::string fixture, std::string metric, double value);

/// Runs the experiment in memory. Extra artifacts (solution tables, cascade
/// grids, batch export) go to cfg.out_dir when `write_artifacts` is set.
RunReport run_experiment(const ExperimentConfig& cfg, bool write_artifacts = false);

void write_results_csv(std::ostream& out, const RunReport& report);
void write_diagnostics_csv(std::ostream& out, const RunReport& report);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

/// Runs the experiment and writes results.csv, diagnostics.csv and
/// manifest.json into cfg.out_dir. Returns the exit code.
int run_to_directory(const ExperimentConfig& cfg);

/// Writes error.json into `dir` (best effort) describing a failed run.
void write_error_record(const std::filesystem::path& dir, int code, const std::string& kind,
                        const std::string& message);

/// Starting path of the experiment.
CadlagPath starting_path(const ExperimentConfig& cfg);

}  // namespace pathfk::cli
