#include <benchmark/benchmark.h>

#include "shadowlab/glue.hpp"
#include "shadowlab/shadow_search.hpp"
#include "shadowlab/straighten.hpp"

using namespace shadowlab;

static void BM_DiskEvaluate(benchmark::State& state) {
  const auto disk = build_disk_flow();
  const Point x = polar_point(0.7, 0.3);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(disk->advance(t, x));
    t += 0.001;
  }
}
BENCHMARK(BM_DiskEvaluate);

static void BM_BottleneckPath(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> v(n * 4 * n);
  for (auto& c : v) c = rng.uniform();
  for (auto _ : state) {
    auto r = bottleneck_path(
        n, 4 * n, [&](std::size_t i, std::size_t j) { return v[i * 4 * n + j]; }, 0.8, {0, 4}, 1);
    benchmark::DoNotOptimize(r.found);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BottleneckPath)->RangeMultiplier(2)->Range(64, 512)->Complexity();

static void BM_SearchOriented(benchmark::State& state) {
  const auto disk = build_disk_flow();
  const auto xi = disk_scenario(disk, 1, 0.01, ScenarioWindow{}, 1);
  SearchParams p;
  p.s_window = 30;
  p.dp_eps = 0.08;
  const auto cands = default_candidates(xi, 0.04, p);
  for (auto _ : state) benchmark::DoNotOptimize(search_oriented(xi, 0.04, cands, p));
}
BENCHMARK(BM_SearchOriented)->Unit(benchmark::kMillisecond);

static void BM_EstimateConstants(benchmark::State& state) {
  const auto disk = build_disk_flow();
  ConstantsOptions o;
  o.T0 = 0.25;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_constants(*disk, 0.3, 0.25, o).T);
}
BENCHMARK(BM_EstimateConstants)->Unit(benchmark::kMillisecond);

static void BM_Straighten(benchmark::State& state) {
  const auto disk = build_disk_flow();
  ConstantsOptions o;
  o.T0 = 0.25;
  const auto consts = estimate_constants(*disk, 0.3, 0.25, o);
  const auto xi = disk_scenario(disk, 1, 0.01, ScenarioWindow{}, 1);
  SearchParams p;
  p.s_window = 30;
  p.dp_eps = 0.15;
  const auto cert = search_oriented(xi, 0.04, default_candidates(xi, 0.04, p), p);
  if (!cert) {
    state.SkipWithError("no oriented certificate");
    return;
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(
        straighten_absolute(xi, cert->x, cert->h, cert->t_lo, cert->t_hi, 0.25, consts).H);
}
BENCHMARK(BM_Straighten)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
