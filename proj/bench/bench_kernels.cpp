#include <benchmark/benchmark.h>

#include "pathfk/brownian.hpp"
#include "pathfk/bsde.hpp"
#include "pathfk/fixtures.hpp"

using namespace pathfk;

namespace {

SimulationConfig config(std::size_t n_paths) {
  return SimulationConfig{TimeGrid(0.0, 1.0, 50), 1, n_paths, 42, false};
}

Execution execution(const benchmark::State& state) {
  return state.range(1) == 0 ? Execution::serial_reference()
                             : Execution::with_threads(static_cast<int>(state.range(1)));
}

void BM_Simulate(benchmark::State& state) {
  const auto cfg = config(static_cast<std::size_t>(state.range(0)));
  const auto exec = execution(state);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(cfg, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SolveRegression(benchmark::State& state) {
  const auto& fx = find_fixture("integral-x2-c0");
  const auto prefix = CadlagPath::constant(1.0, 0.0);
  const auto batch = simulate(config(static_cast<std::size_t>(state.range(0))));
  SolverOptions opts;
  opts.exec = execution(state);
  const auto basis = RegressionBasis::standard();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        solve_regression(fx.problem.terminal, fx.problem.generator, prefix, batch, basis, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Second argument: 0 = serial reference, otherwise the OpenMP thread count.
BENCHMARK(BM_Simulate)->ArgsProduct({{10000, 100000}, {0, 1, 2, 4}})->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveRegression)->ArgsProduct({{10000}, {0, 1, 2, 4}})->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
