#include <benchmark/benchmark.h>

#include <random>

#include "cbi/measures.hpp"
#include "cbi/moments.hpp"
#include "cbi/montecarlo.hpp"
#include "cbi/riccati.hpp"
#include "cbi/rng.hpp"
#include "cbi/scenario.hpp"
#include "cbi/simulate.hpp"

namespace {

using namespace cbi;

const Scenario& s3() {
  static const Scenario s = load_scenario("S3", scenario_dir(CBI_BENCH_SCENARIO_DIR));
  return s;
}

void BM_TemperedBranchingIntegral(benchmark::State& state) {
  const JumpMeasure m(1, {TemperedPowerLawAxis{0, 1.5, 1.0, 1.0}});
  const Vector lam = Vector::Constant(1, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(exp_branching_integral(m, lam, 0));
}
BENCHMARK(BM_TemperedBranchingIntegral);

void BM_ProductExponentialMoment(benchmark::State& state) {
  Vector rates(2);
  rates << 2.0, 4.0;
  const JumpMeasure m(2, {ProductExponential{1.0, rates}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(moment_integral(m, MomentKind::CoordLarge, 0));
  }
}
BENCHMARK(BM_ProductExponentialMoment);

void BM_SolveV(benchmark::State& state) {
  const Scenario& s = s3();
  const DerivedParams der = derive(s.params);
  Vector lam(2);
  lam << 0.2, 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(solve_v(s.params, der, lam, 1.0).v_at(1.0));
}
BENCHMARK(BM_SolveV);

void BM_Expm(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 g(1);
  std::normal_distribution<double> z;
  Matrix A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = z(g);
  }
  for (auto _ : state) benchmark::DoNotOptimize(expm(A));
}
BENCHMARK(BM_Expm)->Arg(2)->Arg(3)->Arg(10)->Arg(50);

void BM_SimulatePath(benchmark::State& state) {
  const Scenario& s = s3();
  SimConfig cfg;
  cfg.dt = 1.0 / static_cast<double>(state.range(0));
  const SimulationPlan plan(s.params, derive(s.params), cfg);
  std::uint64_t k = 0;
  for (auto _ : state) {
    Rng rng = path_rng(s.seed, k++);
    benchmark::DoNotOptimize(simulate_terminal(plan, s.x0, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(plan.steps()));
}
BENCHMARK(BM_SimulatePath)->Arg(256)->Arg(1024);

void BM_EstimateMean(benchmark::State& state) {
  const Scenario& s = s3();
  const DerivedParams der = derive(s.params);
  SimConfig cfg;
  cfg.dt = s.dt;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_mean(s.params, der, s.x0, 1.0, 4096, cfg, s.seed));
  }
}
BENCHMARK(BM_EstimateMean)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
