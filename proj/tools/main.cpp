#include <CLI11.hpp>
#include <iostream>

#include "experiments.hpp"
#include "pathfk/fixtures.hpp"

namespace {

const char* kExitCodes =
    "Exit codes:\n"
    "  0  success, every verdict PASS\n"
    "  2  usage or configuration error\n"
    "  3  unknown experiment kind\n"
    "  4  unknown fixture id\n"
    "  5  solver failure (singular regression, non-finite values, non-convergence)\n"
    "  6  output directory or files not writable\n"
    "  7  run completed but some verdict is FAIL\n"
    "On codes 2-6 an error.json record is written to the output directory.\n";

}  // namespace

int main(int argc, char** argv) {
  using namespace pathfk::cli;
  CLI::App app{"Path-dependent BSDE / PPDE experiment runner"};
  app.footer(kExitCodes);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = -1;
  bool list = false;
  bool export_batch = false;
  app.add_option("--config", config_path, "Experiment config (INI)");
  auto* seed_opt = app.add_option("--seed", seed, "Override the simulation seed");
  app.add_option("--out", out_dir, "Override the output directory");
  app.add_option("--threads", threads, "Worker threads (1 = serial reference)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--list-fixtures", list, "Print the fixture catalog and exit");
  app.add_flag("--export-batch", export_batch, "Also write the Brownian batch (solve only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  if (list) {
    pathfk::write_catalog(std::cout);
    return kOk;
  }
  if (config_path.empty()) {
    std::cerr << "pathfk: --config is required (or --list-fixtures)\n";
    return kUsage;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "pathfk: " << e.what() << '\n';
    write_error_record(out_dir.empty() ? "." : out_dir, kUsage, "config", e.what());
    return kUsage;
  }
  if (*seed_opt) cfg.seed = seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (threads >= 0) cfg.threads = threads;
  if (export_batch) cfg.export_batch = true;

  const int code = run_to_directory(cfg);
  if (code == kOk) {
    std::cout << "pathfk: " << cfg.kind << " finished, results in " << cfg.out_dir.string() << '\n';
  } else if (code == kVerificationFailed) {
    std::cout << "pathfk: " << cfg.kind << " finished with FAIL verdicts, see "
              << (cfg.out_dir / "results.csv").string() << '\n';
  } else {
    std::cerr << "pathfk: failed with exit code " << code << ", see "
              << (cfg.out_dir / "error.json").string() << '\n';
  }
  return code;
}
