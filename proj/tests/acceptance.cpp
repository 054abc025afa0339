// Acceptance suite: runs every shipped experiment config and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "experiments.hpp"

#ifndef PATHFK_CONFIG_DIR
#error "PATHFK_CONFIG_DIR must point at the configs directory"
#endif

namespace fs = std::filesystem;
using namespace pathfk::cli;

namespace {

const fs::path kConfigs = PATHFK_CONFIG_DIR;
const fs::path kScratch = fs::current_path() / "acceptance_out";

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Run {
  RunReport report;
  double seconds = 0.0;
};

Run run_config(const std::string& name, int threads = 0) {
  ExperimentConfig cfg = load_config(kConfigs / (name + ".ini"));
  cfg.threads = threads;
  const auto start = std::chrono::steady_clock::now();
  Run r;
  r.report = run_experiment(cfg, false);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// Checks every verdict-carrying row and reports the worst offender.
Outcome verdicts(const RunReport& report, const std::string& metric_prefix = "") {
  Outcome o;
  std::size_t checked = 0;
  for (const auto& row : report.rows) {
    if (row.rule == "info") continue;
    if (!metric_prefix.empty() && row.metric.rfind(metric_prefix, 0) != 0) continue;
    ++checked;
    if (!row.pass && o.pass) {
      o.pass = false;
      std::ostringstream s;
      s << row.fixture << ' ' << row.metric << '=' << row.value << " (" << row.rule << ' '
        << row.tolerance << ')';
      o.detail = s.str();
    }
  }
  if (checked == 0) {
    o.pass = false;
    o.detail = "no verdict rows for '" + metric_prefix + "'";
  } else if (o.pass) {
    o.detail = std::to_string(checked) + " checks";
  }
  return o;
}

const ResultRow* find_row(const RunReport& report, const std::string& metric) {
  for (const auto& row : report.rows)
    if (row.metric == metric) return &row;
  return nullptr;
}

Outcome combine(const std::vector<Outcome>& parts) {
  Outcome o;
  for (const auto& p : parts) {
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += p.detail;
    o.pass = o.pass && p.pass;
  }
  return o;
}

Outcome within_seconds(const Run& r, double limit) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << r.seconds << " s";
  return Outcome{r.seconds <= limit, s.str()};
}

Outcome criterion_martingale() {
  const Run r = run_config("martingale");
  const ResultRow* se = find_row(r.report, "y_root_se");
  Outcome se_bound{se != nullptr && se->rule == "at_most" && se->pass && se->tolerance <= 0.02,
                   "SE bound"};
  return combine({verdicts(r.report, "y_root"), verdicts(r.report, "z_mean"), se_bound,
                  within_seconds(r, 10.0)});
}

Outcome criterion_linear() {
  const Run r = run_config("linear_generator");
  const ResultRow* y = find_row(r.report, "y_root");
  Outcome ref{y != nullptr && std::abs(y->reference - std::exp(0.1)) < 1e-12,
              "reference e^0.1"};
  return combine({verdicts(r.report, "y_root"), ref, within_seconds(r, 10.0)});
}

Outcome criterion_residual() {
  const Run r = run_config("ppde_residual");
  return combine({verdicts(r.report, "analytic_residual"), verdicts(r.report, "numeric_residual")});
}

Outcome criterion_z() {
  return combine({verdicts(run_config("z_integral").report, "z_rel_error"),
                  verdicts(run_config("z_martingale").report, "z_rel_error")});
}

Outcome criterion_ito() {
  const Run r = run_config("ito");
  Outcome o = verdicts(r.report, "loglog_slope");
  if (const ResultRow* s = find_row(r.report, "loglog_slope")) {
    std::ostringstream d;
    d << "slope " << std::setprecision(4) << s->value;
    o.detail = d.str();
  }
  return o;
}

Outcome criterion_compare() {
  const Run r = run_config("comparison");
  std::size_t pairs = 0;
  for (const auto& row : r.report.rows) pairs += row.metric.rfind("difference[", 0) == 0 ? 1 : 0;
  return combine({verdicts(r.report, "violations"), Outcome{pairs == 100, std::to_string(pairs) + " pairs"}});
}

Outcome criterion_freeze() {
  const Run r = run_config("freeze");
  return combine({verdicts(r.report, "gap["), verdicts(r.report, "final_gap_halved")});
}

Outcome criterion_cascade() {
  const Run r = run_config("cascade");
  return combine({verdicts(r.report, "cascade_vs_closed_form"),
                  verdicts(r.report, "cascade_vs_monte_carlo")});
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every config, run to disk twice serially and once with four threads.
Outcome criterion_determinism() {
  const std::vector<std::string> names{"martingale", "linear_generator", "ppde_residual",
                                       "z_integral", "z_martingale",     "ito",
                                       "comparison", "freeze",           "cascade"};
  Outcome o;
  for (const auto& name : names) {
    std::vector<std::string> outputs;
    for (const auto& [label, threads] :
         std::vector<std::pair<std::string, int>>{{"serial-a", 1}, {"serial-b", 1}, {"threads-4", 4}}) {
      ExperimentConfig cfg = load_config(kConfigs / (name + ".ini"));
      cfg.threads = threads;
      cfg.out_dir = kScratch / name / label;
      fs::remove_all(cfg.out_dir);
      const int code = run_to_directory(cfg);
      if (code != kOk && code != kVerificationFailed) {
        return Outcome{false, name + " exited with " + std::to_string(code)};
      }
      outputs.push_back(read_file(cfg.out_dir / "results.csv"));
    }
    if (outputs[0].empty() || outputs[0] != outputs[1] || outputs[0] != outputs[2]) {
      o.pass = false;
      o.detail = name + ": results.csv differs";
      return o;
    }
  }
  o.detail = std::to_string(names.size()) + " configs byte-identical across reruns and 1/4 threads";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 martingale case", criterion_martingale},
      {"2 linear-generator oracle", criterion_linear},
      {"3 PPDE residual", criterion_residual},
      {"4 Z equals D_x u", criterion_z},
      {"5 functional Ito formula", criterion_ito},
      {"6 comparison", criterion_compare},
      {"7 freezing convergence", criterion_freeze},
      {"8 cascade vs Monte Carlo", criterion_cascade},
      {"9 determinism", criterion_determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << "  (" << o.detail << ")"
              << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
