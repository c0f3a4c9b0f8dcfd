#include <benchmark/benchmark.h>

#include <cmath>

#include "kcs/estimators.hpp"
#include "kcs/kernels.hpp"
#include "kcs/ratio.hpp"
#include "kcs/solvers.hpp"
#include "kcs/synthdata.hpp"

using namespace kcs;

namespace {

Dataset scenario_data(ScenarioId id, ShiftCase c, long n, long m) { return generate(make_scenario(id, c), n, m, 1); }

}  // namespace

static void BM_Gram(benchmark::State& state) {
  const Dataset d = scenario_data(ScenarioId::krr3d_s2, ShiftCase::uniform, state.range(0), 10);
  const auto k = KernelSpec::gaussian(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(gram(k, d.source_x));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gram)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNSquared);

static void BM_WeightedRidge(benchmark::State& state) {
  const Dataset d = scenario_data(ScenarioId::krr1d_s1, ShiftCase::uniform, state.range(0), 10);
  const Matrix K = gram(KernelSpec::gaussian(0.5), d.source_x);
  const Vector w = Vector::Ones(d.n());
  for (auto _ : state) benchmark::DoNotOptimize(solve_weighted_ridge(K, w, d.source_y, 1e-3 * double(d.n())));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_WeightedRidge)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNCubed);

// Dual solver through the check-loss fit; state.range(1) is -log10(lambda).
static void BM_QuantileFit(benchmark::State& state) {
  const Dataset d = scenario_data(ScenarioId::kqr1d, ShiftCase::uniform, state.range(0), 10);
  FitConfig cfg;
  cfg.loss = LossSpec::check(0.3);
  cfg.kernel = KernelSpec::gaussian(median_heuristic_bandwidth(d.source_x));
  cfg.lambda = std::pow(10.0, -double(state.range(1)));
  long iters = 0;
  for (auto _ : state) {
    const FittedModel m = fit(d, cfg);
    iters = m.diagnostics.iterations;
    benchmark::DoNotOptimize(m.alpha.data());
  }
  state.counters["pair_updates"] = double(iters);
}
BENCHMARK(BM_QuantileFit)->Args({250, 2})->Args({500, 2})->Args({500, 4})->Args({1000, 4})->Unit(benchmark::kMillisecond);

static void BM_SvmFit(benchmark::State& state) {
  const Dataset d = scenario_data(ScenarioId::klr3d_s5, ShiftCase::uniform, state.range(0), 10);
  FitConfig cfg;
  cfg.loss = LossSpec::hinge();
  cfg.kernel = KernelSpec::gaussian(median_heuristic_bandwidth(d.source_x));
  cfg.lambda = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, cfg).alpha.data());
}
BENCHMARK(BM_SvmFit)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_LogisticFit(benchmark::State& state) {
  const Dataset d = scenario_data(ScenarioId::klr3d_s5, ShiftCase::uniform, state.range(0), 10);
  FitConfig cfg;
  cfg.loss = LossSpec::logistic();
  cfg.kernel = KernelSpec::gaussian(median_heuristic_bandwidth(d.source_x));
  cfg.lambda = 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, cfg).alpha.data());
}
BENCHMARK(BM_LogisticFit)->Arg(250)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_Kliep(benchmark::State& state) {
  const Dataset d = scenario_data(ScenarioId::kqr1d, ShiftCase::moment, state.range(0), state.range(0));
  KliepOptions opt;
  opt.basis = int(state.range(1));
  long iters = 0;
  for (auto _ : state) {
    KliepDiagnostics diag;
    benchmark::DoNotOptimize(kliep_fit(d.source_x, d.target_x, opt, &diag).coeffs.data());
    iters = diag.iterations;
  }
  state.counters["iterations"] = double(iters);
}
BENCHMARK(BM_Kliep)->Args({500, 100})->Args({1000, 100})->Args({1000, 200})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
