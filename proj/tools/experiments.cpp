#include "experiments.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "pathfk/brownian.hpp"
#include "pathfk/bsde.hpp"
#include "pathfk/cascade.hpp"
#include "pathfk/error.hpp"
#include "pathfk/fixtures.hpp"
#include "pathfk/functional_calculus.hpp"
#include "pathfk/ppde.hpp"

#ifndef PATHFK_VERSION
#define PATHFK_VERSION "0.0.0"
#endif

namespace pathfk::cli {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigError("config: cannot parse '" + text + "' for key " + key);
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config: expected a boolean for key " + key + ", got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string label(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

// Accepted keys per section; anything else is a configuration error.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"kind", "fixture"}},
      {"path", {"t", "x0", "prefix_csv"}},
      {"grid", {"steps"}},
      {"simulation", {"n_paths", "seed", "antithetic", "threads", "export_batch"}},
      {"regression", {"degree"}},
      {"fd", {"h", "delta"}},
      {"freeze", {"levels"}},
      {"verify",
       {"samples", "times", "steps_list", "quadratic_variation", "nested", "picard",
        "checked_paths", "rel_tol", "z_tol", "residual_tol", "slope_min", "se_max"}},
      {"output", {"dir", "cascade_stride"}},
  };
  return s;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"solve",           "verify-ppde", "verify-z",
                                              "verify-ito",      "freeze-converge",
                                              "compare",         "cascade"};
  return kinds;
}

ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  std::map<std::string, std::string> kv;
  for (const auto& [section, body] : pt) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key))
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      kv[section + "." + key] = trim(value.data());
    }
  }

  ExperimentConfig c;
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto v = get("experiment.kind")) c.kind = *v;
  if (auto v = get("experiment.fixture")) c.fixture = *v;
  if (auto v = get("path.t")) c.t = parse_number<double>("t", *v);
  if (auto v = get("path.x0")) c.x0 = parse_number<double>("x0", *v);
  if (auto v = get("path.prefix_csv")) c.prefix_csv = *v;
  if (auto v = get("grid.steps")) c.steps = parse_number<std::size_t>("steps", *v);
  if (auto v = get("simulation.n_paths")) c.n_paths = parse_number<std::size_t>("n_paths", *v);
  if (auto v = get("simulation.seed")) c.seed = parse_number<std::uint64_t>("seed", *v);
  if (auto v = get("simulation.antithetic")) c.antithetic = parse_bool("antithetic", *v);
  if (auto v = get("simulation.threads")) c.threads = parse_number<int>("threads", *v);
  if (auto v = get("simulation.export_batch")) c.export_batch = parse_bool("export_batch", *v);
  if (auto v = get("regression.degree")) c.degree = parse_number<int>("degree", *v);
  if (auto v = get("fd.h")) c.h = parse_number<double>("h", *v);
  if (auto v = get("fd.delta")) c.delta = parse_number<double>("delta", *v);
  if (auto v = get("freeze.levels")) {
    c.levels.clear();
    for (const auto& s : split_list(*v)) c.levels.push_back(parse_number<std::size_t>("levels", s));
  }
  if (auto v = get("verify.samples")) c.samples = parse_number<std::size_t>("samples", *v);
  if (auto v = get("verify.times")) {
    c.times.clear();
    for (const auto& s : split_list(*v)) c.times.push_back(parse_number<double>("times", s));
  }
  if (auto v = get("verify.steps_list")) {
    c.steps_list.clear();
    for (const auto& s : split_list(*v))
      c.steps_list.push_back(parse_number<std::size_t>("steps_list", s));
  }
  if (auto v = get("verify.quadratic_variation")) c.quadratic_variation = *v;
  if (auto v = get("verify.nested")) c.nested = parse_bool("nested", *v);
  if (auto v = get("verify.picard")) c.picard = parse_bool("picard", *v);
  if (auto v = get("verify.checked_paths"))
    c.checked_paths = parse_number<std::size_t>("checked_paths", *v);
  if (auto v = get("verify.rel_tol")) c.rel_tol = parse_number<double>("rel_tol", *v);
  if (auto v = get("verify.z_tol")) c.z_tol = parse_number<double>("z_tol", *v);
  if (auto v = get("verify.residual_tol")) c.residual_tol = parse_number<double>("residual_tol", *v);
  if (auto v = get("verify.slope_min")) c.slope_min = parse_number<double>("slope_min", *v);
  if (auto v = get("verify.se_max")) c.se_max = parse_number<double>("se_max", *v);
  if (auto v = get("output.dir")) c.out_dir = *v;
  if (auto v = get("output.cascade_stride"))
    c.cascade_stride = parse_number<std::size_t>("cascade_stride", *v);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  ExperimentConfig c = parse_config(in);
  // Relative prefix files are resolved against the config's directory.
  if (!c.prefix_csv.empty() && std::filesystem::path(c.prefix_csv).is_relative())
    c.prefix_csv = (path.parent_path() / c.prefix_csv).string();
  return c;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream s;
  s << std::setprecision(17) << "kind=" << kind << "\nfixture=" << fixture << "\nt=" << t
    << "\nx0=" << x0 << "\nprefix_csv=" << prefix_csv << "\nsteps=" << steps
    << "\nn_paths=" << n_paths << "\nseed=" << seed << "\nantithetic=" << antithetic
    << "\ndegree=" << degree << "\nh=" << h << "\ndelta=" << delta << "\nlevels=" << join(levels)
    << "\nsamples=" << samples << "\ntimes=" << join(times) << "\nsteps_list=" << join(steps_list)
    << "\nquadratic_variation=" << quadratic_variation << "\nnested=" << nested
    << "\npicard=" << picard << "\nchecked_paths=" << checked_paths << "\nrel_tol=" << rel_tol
    << "\nz_tol=" << z_tol << "\nresidual_tol=" << residual_tol << "\nslope_min=" << slope_min
    << "\nse_max=" << se_max << "\ncascade_stride=" << cascade_stride << '\n';
  return s.str();
}

Execution ExperimentConfig::execution() const {
  return threads == 1 ? Execution::serial_reference() : Execution::with_threads(threads);
}

void ExperimentConfig::validate() const {
  if (kind.empty()) throw ConfigError("config: [experiment] kind is required");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
    throw UnknownExperiment("unknown experiment kind '" + kind + "'");
  if (kind != "compare") {
    if (fixture.empty()) throw ConfigError("config: [experiment] fixture is required");
    find_fixture(fixture);
  }
  if (steps == 0) throw ConfigError("config: steps must be positive");
  if (n_paths == 0) throw ConfigError("config: n_paths must be positive");
  if (antithetic && n_paths % 2 != 0) throw ConfigError("config: antithetic needs even n_paths");
  if (degree < 1) throw ConfigError("config: degree must be at least 1");
  if (h < 0.0 || delta < 0.0) throw ConfigError("config: fd steps must be non-negative");
  if (levels.empty() || std::count(levels.begin(), levels.end(), 0u) > 0)
    throw ConfigError("config: freeze levels must be positive");
  if (quadratic_variation != "brownian" && quadratic_variation != "pathwise")
    throw ConfigError("config: quadratic_variation must be brownian or pathwise");
  if (threads < 0) throw ConfigError("config: threads must be non-negative");
  if (t < 0.0) throw ConfigError("config: t must be non-negative");
}

bool RunReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.pass; });
}

ResultRow within(std::string fixture, std::string metric, double value, double reference,
                 double tolerance) {
  return ResultRow{std::move(fixture), std::move(metric), value, reference, tolerance, "within",
                   std::abs(value - reference) <= tolerance};
}

ResultRow at_most(std::string fixture, std::string metric, double value, double bound) {
  return ResultRow{std::move(fixture), std::move(metric), value, 0.0, bound, "at_most",
                   value <= bound};
}

ResultRow at_least(std::string fixture, std::string metric, double value, double bound) {
  return ResultRow{std::move(fixture), std::move(metric), value, 0.0, bound, "at_least",
                   value >= bound};
}

ResultRow info(std::string fixture, std::string metric, double value) {
  return ResultRow{std::move(fixture), std::move(metric), value, 0.0, 0.0, "info", true};
}

CadlagPath starting_path(const ExperimentConfig& cfg) {
  if (!cfg.prefix_csv.empty()) {
    std::ifstream in(cfg.prefix_csv);
    if (!in) throw ConfigError("config: cannot open prefix_csv " + cfg.prefix_csv);
    return read_csv(in);
  }
  return CadlagPath::constant(cfg.x0, cfg.t);
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  bool write_artifacts;
  RunReport& report;
  Execution exec;
  RegressionBasis basis;
  SolverOptions opts;

  MonteCarloSpec mc() const { return MonteCarloSpec{cfg.steps, cfg.n_paths, cfg.seed, cfg.antithetic}; }

  std::ofstream artifact(const std::string& name) const {
    std::ofstream out(cfg.out_dir / name);
    if (!out) throw OutputError("cannot write " + (cfg.out_dir / name).string());
    return out;
  }
};

void add_condition_diagnostics(Context& c, const std::string& fixture, const std::string& prefix,
                               const BsdeSolution& s) {
  double worst = 1.0;
  for (double v : s.condition_numbers) worst = std::max(worst, v);
  c.report.diagnostics.push_back({fixture, prefix + "max_condition_number", worst});
  c.report.diagnostics.push_back({fixture, prefix + "iterations", static_cast<double>(s.iterations)});
}

void run_solve(Context& c) {
  const Fixture& fx = find_fixture(c.cfg.fixture);
  const CadlagPath prefix = starting_path(c.cfg);
  const SimulationConfig sim{TimeGrid(prefix.horizon(), fx.problem.T, c.cfg.steps),
                             prefix.dimension(), c.cfg.n_paths, c.cfg.seed, c.cfg.antithetic};
  const PathBatch batch = simulate(sim, c.exec);
  const BsdeSolution s =
      solve_regression(fx.problem.terminal, fx.problem.generator, prefix, batch, c.basis, c.opts);
  auto& rows = c.report.rows;

  if (fx.closed_form) {
    const double ref = fx.closed_form(prefix);
    rows.push_back(within(fx.id, "y_root", s.y_root, ref,
                          std::max(3.0 * s.y_root_se, c.cfg.rel_tol * std::abs(ref))));
  } else {
    rows.push_back(info(fx.id, "y_root", s.y_root));
  }
  rows.push_back(c.cfg.se_max > 0.0 ? at_most(fx.id, "y_root_se", s.y_root_se, c.cfg.se_max)
                                    : info(fx.id, "y_root_se", s.y_root_se));

  if (fx.bundle) {
    // Mean regression Z per step against the mean analytic D_x u at the
    // realized prefixes; z_tol = 0 reports them without a verdict.
    const auto paths = cumulate(batch, prefix);
    for (std::size_t k = 0; k < s.grid.steps; ++k) {
      double z = 0.0;
      double dx = 0.0;
      for (std::size_t i = 0; i < s.n_paths; ++i) {
        z += s.z(i, k);
        dx += fx.bundle(paths[i].view().head(prefix.size() + k)).vertical[0];
      }
      const auto n = static_cast<double>(s.n_paths);
      const std::string at = "[step=" + std::to_string(k) + "]";
      if (c.cfg.z_tol > 0.0) {
        rows.push_back(within(fx.id, "z_mean" + at, z / n, dx / n, c.cfg.z_tol));
      } else {
        rows.push_back(info(fx.id, "z_mean" + at, z / n));
        rows.push_back(info(fx.id, "dxu_mean" + at, dx / n));
      }
      c.report.diagnostics.push_back({fx.id, "z_mean_se" + at, s.z_mean_se[k]});
    }
  }

  if (c.cfg.picard) {
    const BsdeSolution p =
        solve_picard(fx.problem.terminal, fx.problem.generator, prefix, batch, c.basis, {}, c.opts);
    rows.push_back(within(fx.id, "picard_y_root", p.y_root, s.y_root,
                          3.0 * std::hypot(p.y_root_se, s.y_root_se)));
    add_condition_diagnostics(c, fx.id, "picard.", p);
  }
  add_condition_diagnostics(c, fx.id, "", s);
  for (std::size_t k = 1; k < s.condition_numbers.size(); ++k)
    c.report.diagnostics.push_back(
        {fx.id, "condition_number[step=" + std::to_string(k) + "]", s.condition_numbers[k]});

  if (c.write_artifacts) {
    auto out = c.artifact("solution.csv");
    write_solution_csv(out, s);
    if (c.cfg.export_batch) {
      auto b = c.artifact("batch.csv");
      write_batch_csv(b, batch);
    }
  }
}

CadlagPath random_step_path(std::uint64_t seed, std::size_t index, double T) {
  std::mt19937_64 rng(stream_seed(seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double horizon = T * (0.05 + 0.9 * unit(rng));
  std::vector<double> times;
  std::vector<double> values;
  for (int i = 0; i <= 8; ++i) {
    times.push_back(horizon * i / 8.0);
    values.push_back(gauss(rng));
  }
  return CadlagPath::scalar(std::move(times), std::move(values));
}

void run_verify_ppde(Context& c) {
  const Fixture& fx = find_fixture(c.cfg.fixture);
  if (!fx.bundle) throw ConfigError("verify-ppde: fixture " + fx.id + " has no analytic bundle");
  auto& rows = c.report.rows;
  for (std::size_t i = 0; i < c.cfg.samples; ++i) {
    const CadlagPath p = random_step_path(c.cfg.seed, i, fx.problem.T);
    const double r = ppde_residual(fx.bundle, fx.problem, p);
    rows.push_back(at_most(fx.id, "analytic_residual[path=" + std::to_string(i) + "]",
                           std::abs(r), c.cfg.residual_tol));
  }

  const CadlagPath prefix = starting_path(c.cfg);
  const double tau = fx.problem.T - prefix.horizon();
  const double h = c.cfg.h > 0.0 ? c.cfg.h : 0.05;
  const double delta = c.cfg.delta > 0.0 ? c.cfg.delta : 0.05 * tau;
  const NumericResidual nr =
      numeric_ppde_residual(fx.problem, prefix, c.mc(), c.basis, h, delta, c.opts);
  rows.push_back(within(fx.id, "numeric_residual", nr.residual, 0.0, 3.0 * nr.band));
  rows.push_back(info(fx.id, "numeric_residual_se", nr.se));
  rows.push_back(info(fx.id, "numeric_residual_fd_error", nr.fd_error));
  rows.push_back(info(fx.id, "numeric_residual_discretization_error", nr.discretization_error));
  const DerivativeBundle exact = fx.bundle(prefix);
  rows.push_back(info(fx.id, "numeric_D_t", nr.bundle.horizontal));
  rows.push_back(info(fx.id, "analytic_D_t", exact.horizontal));
  rows.push_back(info(fx.id, "numeric_D_x", nr.bundle.vertical[0]));
  rows.push_back(info(fx.id, "analytic_D_x", exact.vertical[0]));
  rows.push_back(info(fx.id, "numeric_D_xx", nr.bundle.hessian(0, 0)));
  rows.push_back(info(fx.id, "analytic_D_xx", exact.hessian(0, 0)));

  if (c.write_artifacts) {
    auto out = c.artifact("residuals.csv");
    out << "# schema=1\nt,residual,error_band\n" << std::setprecision(17);
    for (std::size_t i = 0; i < c.cfg.samples; ++i) {
      const CadlagPath p = random_step_path(c.cfg.seed, i, fx.problem.T);
      out << p.horizon() << ',' << ppde_residual(fx.bundle, fx.problem, p) << ",0\n";
    }
    out << prefix.horizon() << ',' << nr.residual << ',' << nr.band << '\n';
  }
}

void run_verify_z(Context& c) {
  const Fixture& fx = find_fixture(c.cfg.fixture);
  const CadlagPath prefix = starting_path(c.cfg);
  const SimulationConfig sim{TimeGrid(prefix.horizon(), fx.problem.T, c.cfg.steps), 1,
                             c.cfg.n_paths, c.cfg.seed, c.cfg.antithetic};
  auto& rows = c.report.rows;

  if (fx.bundle) {
    const PathBatch batch = simulate(sim, c.exec);
    const BsdeSolution s =
        solve_regression(fx.problem.terminal, fx.problem.generator, prefix, batch, c.basis, c.opts);
    const auto paths = cumulate(batch, prefix);
    for (double time : c.cfg.times) {
      if (time < prefix.horizon() || time >= fx.problem.T)
        throw ConfigError("verify-z: time " + label(time) + " outside [t, T)");
      const auto k = std::min<std::size_t>(
          sim.grid.steps - 1,
          static_cast<std::size_t>(std::lround((time - prefix.horizon()) / sim.grid.dt())));
      double sq = 0.0, ref = 0.0, zsum = 0.0, dsum = 0.0;
      for (std::size_t i = 0; i < s.n_paths; ++i) {
        const double a = fx.bundle(paths[i].view().head(prefix.size() + k)).vertical[0];
        const double z = s.z(i, k);
        sq += (z - a) * (z - a);
        ref += a * a;
        zsum += z;
        dsum += a;
      }
      const auto n = static_cast<double>(s.n_paths);
      const double rel = ref > 0.0 ? std::sqrt(sq / ref) : std::sqrt(sq / n);
      const std::string at = "[t=" + label(sim.grid.node(k)) + "]";
      rows.push_back(at_most(fx.id, "z_rel_error" + at, rel, c.cfg.z_tol));
      rows.push_back(info(fx.id, "z_mean" + at, zsum / n));
      rows.push_back(info(fx.id, "dxu_mean" + at, dsum / n));
    }
    add_condition_diagnostics(c, fx.id, "", s);
  }

  if (c.cfg.nested || !fx.bundle) {
    ZConsistencyOptions zo;
    zo.checked_paths = c.cfg.checked_paths;
    zo.h = c.cfg.h;
    const auto rep = z_consistency(fx.problem, prefix, c.mc(), c.basis, c.cfg.times, zo, c.opts);
    for (const auto& row : rep.rows) {
      const std::string at = "[t=" + label(row.time) + "]";
      rows.push_back(at_most(fx.id, "z_nested_rel_error" + at, row.relative_error, c.cfg.z_tol));
      rows.push_back(info(fx.id, "z_nested_regression" + at, row.z_regression));
      rows.push_back(info(fx.id, "z_nested_derivative" + at, row.z_derivative));
      rows.push_back(info(fx.id, "z_nested_se" + at, row.se));
    }
    rows.push_back(at_most(fx.id, "z_nested_partial", rep.partial ? 1.0 : 0.0, 0.0));
  }
}

void run_verify_ito(Context& c) {
  const Fixture& fx = find_fixture(c.cfg.fixture);
  if (!fx.bundle) throw ConfigError("verify-ito: fixture " + fx.id + " has no analytic bundle");
  const CadlagPath prefix = starting_path(c.cfg);
  const auto qv = c.cfg.quadratic_variation == "pathwise" ? QuadraticVariation::Pathwise
                                                          : QuadraticVariation::Brownian;
  auto& rows = c.report.rows;
  std::vector<double> logdt;
  std::vector<double> logr;
  for (std::size_t n : c.cfg.steps_list) {
    const SimulationConfig sim{TimeGrid(prefix.horizon(), fx.problem.T, n), 1, c.cfg.samples,
                               c.cfg.seed, false};
    const auto paths = cumulate(simulate(sim, c.exec), prefix);
    std::vector<double> sq(paths.size());
    parallel_for(paths.size(), c.exec, [&](std::size_t i) {
      const double r = ito_residual(fx.functional, fx.bundle, paths[i], sim.grid, qv);
      sq[i] = r * r;
    });
    double total = 0.0;
    for (double v : sq) total += v;
    const double l2 = std::sqrt(total / static_cast<double>(paths.size()));
    rows.push_back(info(fx.id, "l2_residual[steps=" + std::to_string(n) + "]", l2));
    logdt.push_back(std::log(sim.grid.dt()));
    logr.push_back(std::log(l2));
  }
  if (logdt.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < logdt.size(); ++i) mx += logdt[i], my += logr[i];
    mx /= static_cast<double>(logdt.size());
    my /= static_cast<double>(logdt.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < logdt.size(); ++i) {
      sxy += (logdt[i] - mx) * (logr[i] - my);
      sxx += (logdt[i] - mx) * (logdt[i] - mx);
    }
    rows.push_back(at_least(fx.id, "loglog_slope", sxy / sxx, c.cfg.slope_min));
  }
}

void run_freeze(Context& c) {
  const Fixture& fx = find_fixture(c.cfg.fixture);
  const CadlagPath prefix = starting_path(c.cfg);
  const BsdeSolution base = u_solution(fx.problem, prefix, c.mc(), c.basis, c.opts);
  auto& rows = c.report.rows;
  rows.push_back(info(fx.id, "u", base.y_root));
  if (fx.closed_form) rows.push_back(info(fx.id, "u_closed_form", fx.closed_form(prefix)));

  std::vector<std::size_t> levels = c.cfg.levels;
  std::sort(levels.begin(), levels.end());
  double previous = 0.0;
  double first = 0.0;
  double last = 0.0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const std::size_t n = levels[j];
    const BsdeSolution sn = frozen_solution(fx.problem, prefix, n, c.mc(), c.basis, c.opts);
    const Estimate d = paired_difference(sn, base);
    const std::string at = "[n=" + std::to_string(n) + "]";
    rows.push_back(info(fx.id, "u_frozen" + at, sn.y_root));
    rows.push_back(info(fx.id, "gap_se" + at, d.se));
    const double gap = std::abs(d.value);
    if (j == 0) {
      rows.push_back(info(fx.id, "gap" + at, gap));
      first = gap;
    } else {
      rows.push_back(at_most(fx.id, "gap" + at, gap, previous + d.se));
    }
    previous = gap;
    last = gap;
  }
  if (levels.size() >= 2) rows.push_back(at_most(fx.id, "final_gap_halved", last, first / 2.0));
}

void run_compare(Context& c) {
  const CadlagPath prefix = starting_path(c.cfg);
  const double T = 1.0;
  const SimulationConfig sim{TimeGrid(prefix.horizon(), T, c.cfg.steps), 1, c.cfg.n_paths,
                             c.cfg.seed, c.cfg.antithetic};
  const PathBatch batch = simulate(sim, c.exec);
  auto& rows = c.report.rows;
  std::size_t violations = 0;
  for (std::size_t k = 0; k < c.cfg.samples; ++k) {
    const OrderedPair pair = random_ordered_pair(c.cfg.seed, k);
    const ComparisonReport r =
        comparison_check(pair.terminal1, pair.generator1, pair.terminal2, pair.generator2, prefix,
                         batch, c.basis, c.opts);
    const double slack = 1e-12 * (1.0 + std::abs(r.y1) + std::abs(r.y2));
    ResultRow row = at_most("ordered-pair", "difference[pair=" + std::to_string(k) + "]",
                            r.difference, 3.0 * r.se + slack);
    row.pass = !r.violation;
    rows.push_back(row);
    violations += r.violation ? 1 : 0;
  }
  rows.push_back(at_most("ordered-pair", "violations", static_cast<double>(violations), 0.0));
}

void run_cascade(Context& c) {
  const Fixture& fx = find_fixture(c.cfg.fixture);
  if (!fx.cascade) throw ConfigError("cascade: fixture " + fx.id + " has no cascade form");
  const CadlagPath prefix = starting_path(c.cfg);
  const CascadeResult r = cascade_solve(*fx.cascade, prefix);
  auto& rows = c.report.rows;
  if (fx.closed_form) {
    const double ref = fx.closed_form(prefix);
    rows.push_back(within(fx.id, "cascade_vs_closed_form", r.value, ref, 0.005 * std::abs(ref)));
  } else {
    rows.push_back(info(fx.id, "cascade_value", r.value));
  }
  const Estimate mc = u_eval(fx.problem, prefix, c.mc(), c.basis, c.opts);
  rows.push_back(within(fx.id, "cascade_vs_monte_carlo", r.value, mc.value,
                        std::max(0.01 * std::abs(r.value), 3.0 * mc.se)));
  rows.push_back(info(fx.id, "monte_carlo_se", mc.se));
  c.report.diagnostics.push_back({fx.id, "stage1_levels", static_cast<double>(r.v1.times.size())});
  c.report.diagnostics.push_back({fx.id, "stage2_levels", static_cast<double>(r.v2.times.size())});
  if (c.write_artifacts) {
    auto v1 = c.artifact("cascade_v1.csv");
    auto v2 = c.artifact("cascade_v2.csv");
    write_cascade_csv(v1, v2, r, c.cfg.cascade_stride);
  }
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, bool write_artifacts) {
  cfg.validate();
  RunReport report;
  report.kind = cfg.kind;
  report.seed = cfg.seed;
  Context c{cfg,
            write_artifacts,
            report,
            cfg.execution(),
            cfg.fixture.empty() ? RegressionBasis::standard(1, cfg.degree)
                                : fixture_basis(find_fixture(cfg.fixture), cfg.degree),
            SolverOptions{}};
  c.opts.exec = c.exec;

  if (cfg.kind == "solve") run_solve(c);
  else if (cfg.kind == "verify-ppde") run_verify_ppde(c);
  else if (cfg.kind == "verify-z") run_verify_z(c);
  else if (cfg.kind == "verify-ito") run_verify_ito(c);
  else if (cfg.kind == "freeze-converge") run_freeze(c);
  else if (cfg.kind == "compare") run_compare(c);
  else if (cfg.kind == "cascade") run_cascade(c);
  return report;
}

void write_results_csv(std::ostream& out, const RunReport& report) {
  out << "# schema=1\nexperiment,fixture,seed,metric,value,reference,tolerance,rule,verdict\n";
  for (const auto& r : report.rows) {
    out << report.kind << ',' << r.fixture << ',' << report.seed << ',' << r.metric << ','
        << format_double(r.value) << ',' << format_double(r.reference) << ','
        << format_double(r.tolerance) << ',' << r.rule << ','
        << (r.rule == "info" ? "INFO" : (r.pass ? "PASS" : "FAIL")) << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, const RunReport& report) {
  out << "# schema=1\nexperiment,fixture,key,value\n";
  for (const auto& d : report.diagnostics)
    out << report.kind << ',' << d.fixture << ',' << d.key << ',' << format_double(d.value) << '\n';
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_error_record(const std::filesystem::path& dir, int code, const std::string& kind,
                        const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(dir / "error.json");
  if (!out) return;
  nlohmann::json j{{"exit_code", code}, {"error", kind}, {"message", message}};
  out << j.dump(2) << '\n';
}

int run_to_directory(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  std::string kind;
  std::string message;
  try {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec || !std::filesystem::is_directory(cfg.out_dir))
      throw OutputError("cannot create output directory " + cfg.out_dir.string());

    const RunReport report = run_experiment(cfg, true);
    {
      std::ofstream out(cfg.out_dir / "results.csv");
      if (!out) throw OutputError("cannot write results.csv");
      write_results_csv(out, report);
    }
    {
      std::ofstream out(cfg.out_dir / "diagnostics.csv");
      if (!out) throw OutputError("cannot write diagnostics.csv");
      write_diagnostics_csv(out, report);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(cfg.canonical());
    nlohmann::json manifest{{"tool", "pathfk"},
                            {"version", PATHFK_VERSION},
                            {"experiment", cfg.kind},
                            {"fixture", cfg.fixture},
                            {"seed", cfg.seed},
                            {"config_hash", hash.str()},
                            {"config", cfg.canonical()},
                            {"threads", cfg.threads},
                            {"wall_time_seconds", wall},
                            {"passed", report.passed()},
                            {"rows", report.rows.size()}};
    std::ofstream out(cfg.out_dir / "manifest.json");
    if (!out) throw OutputError("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
    std::filesystem::remove(cfg.out_dir / "error.json", ec);
    return report.passed() ? kOk : kVerificationFailed;
  } catch (const UnknownExperiment& e) {
    code = kUnknownKind, kind = "unknown_experiment", message = e.what();
  } catch (const UnknownFixture& e) {
    code = kUnknownFixture, kind = "unknown_fixture", message = e.what();
  } catch (const ConfigError& e) {
    code = kUsage, kind = "config", message = e.what();
  } catch (const OutputError& e) {
    code = kIoFailure, kind = "io", message = e.what();
  } catch (const DomainError& e) {
    code = kUsage, kind = "domain", message = e.what();
  } catch (const SolverError& e) {
    code = kSolverFailure, kind = "solver", message = e.what();
  }
  write_error_record(cfg.out_dir, code, kind, message);
  return code;
}

}  // namespace pathfk::cli
