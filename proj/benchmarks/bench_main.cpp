#include <benchmark/benchmark.h>

#include <random>

#include "rcis/dynamics.hpp"
#include "rcis/grid.hpp"
#include "rcis/hamiltonian.hpp"
#include "rcis/hj_solver.hpp"
#include "rcis/synthesis.hpp"

namespace {

using namespace rcis;

constexpr std::size_t sweeps = 20;

Grid square(std::size_t nodes) { return Grid({-1.0, -1.0}, {1.0, 1.0}, {nodes, nodes}); }

// Fixed number of sweeps including operator setup; tol 0 never stops early.
void run_sweeps(benchmark::State& state, Backend backend) {
  const GameModel model = builtin_model("jet_engine");
  const Grid grid = square(static_cast<std::size_t>(state.range(0)));
  SolveConfig config;
  config.backend = backend;
  config.tol = 1e-300;
  config.max_iters = sweeps;
  for (auto _ : state) {
    SolveResult r = solve(model, grid, config);
    benchmark::DoNotOptimize(r.field.values.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * grid.size() * sweeps));
}

void BM_SemiLagrangianSweeps(benchmark::State& state) { run_sweeps(state, Backend::sl); }
void BM_FiniteDifferenceSweeps(benchmark::State& state) { run_sweeps(state, Backend::fd); }
BENCHMARK(BM_SemiLagrangianSweeps)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FiniteDifferenceSweeps)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

void BM_Hamiltonian(benchmark::State& state) {
  const GameModel model = builtin_model("jet_engine");
  HamiltonianOptions options;
  if (state.range(0) > 0) {
    options.mode = HamiltonianMode::sampled;
    options.control_samples = static_cast<std::size_t>(state.range(0));
    options.disturbance_samples = static_cast<std::size_t>(state.range(0));
  }
  const HamiltonianEvaluator ev(model, options);
  std::mt19937_64 rng(1);
  std::vector<Vec> xs(1024), ps(1024);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = {2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1};
    ps[i] = {2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1};
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev.lower(xs[i], ps[i]));
    i = (i + 1) % xs.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
// 0: analytic affine form; n > 0: n samples per action axis.
BENCHMARK(BM_Hamiltonian)->Arg(0)->Arg(2)->Arg(9);

void BM_Interpolate(benchmark::State& state) {
  const Grid grid = square(201);
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec x = grid.node_point(k);
    values[k] = x[0] * x[0] + x[1];
  }
  std::mt19937_64 rng(2);
  std::vector<Vec> xs(1024);
  for (auto& x : xs) x = {2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid.interpolate(values, xs[i]));
    i = (i + 1) % xs.size();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_Interpolate);

}  // namespace

BENCHMARK_MAIN();
