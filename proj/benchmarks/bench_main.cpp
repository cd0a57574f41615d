#include <benchmark/benchmark.h>

#include "kpzlab/brownian.hpp"
#include "kpzlab/kernels.hpp"
#include "kpzlab/limit.hpp"
#include "kpzlab/noise.hpp"
#include "kpzlab/she.hpp"

using namespace kpzlab;

static void BM_SheStep(benchmark::State& state) {
  SheConfig cfg;
  cfg.beta = 0.5;
  cfg.eps = 0.1;
  cfg.t_final = 1.0;
  cfg.dt = 1e-3;
  cfg.grid = TorusGrid(0.1 * static_cast<double>(state.range(0)) / 4.0, static_cast<int>(state.range(0)));
  const SheSolver solver(cfg);
  auto field = FieldState::flat(cfg.grid);
  Rng rng(SeedStream{1, 0});
  for (auto _ : state) {
    solver.step(field, rng);
    benchmark::DoNotOptimize(field.u.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.grid.size()));
}
BENCHMARK(BM_SheStep)->Arg(32)->Arg(64)->Arg(128);

static void BM_Mollify(benchmark::State& state) {
  const TorusGrid grid(0.8, static_cast<int>(state.range(0)));
  const MollificationOperator op(grid, Mollifier::smooth_bump(), 0.1);
  const auto raw = sample_increment_slice(grid, 1e-3, SeedStream{2, 0});
  Field out(grid.size());
  for (auto _ : state) {
    op.apply(raw.raw, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Mollify)->Arg(64)->Arg(128);

static void BM_AdaptiveWalker(benchmark::State& state) {
  const double eps = 1.0 / static_cast<double>(state.range(0));
  std::uint64_t replica = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kr_sample(eps, 1.0, Vec2{}, SeedStream{3, replica++}));
  }
}
BENCHMARK(BM_AdaptiveWalker)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_CovarianceLookup(benchmark::State& state) {
  const auto& R = default_covariance();
  double r = 0.0;
  for (auto _ : state) {
    r += 1e-4;
    if (r > 1.0) r = 0.0;
    benchmark::DoNotOptimize(R.radial(r));
  }
}
BENCHMARK(BM_CovarianceLookup);

static void BM_RadialF(benchmark::State& state) {
  const double eps = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_F_radial(1.0, eps, 1.0 / (eps * eps)).final_profile.front());
  }
  state.SetLabel("T = eps^-2");
}
BENCHMARK(BM_RadialF)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
