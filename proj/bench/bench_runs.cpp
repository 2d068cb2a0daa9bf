// Serial reference vs OpenMP runner on the Monte Carlo kernels, plus the
// per-step detector cost.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "srrs/detectors.hpp"
#include "srrs/montecarlo.hpp"

using namespace srrs;

namespace {

const ModelSpec kGamma = ModelSpec::gamma_shape(1.0);
const ModelSpec kNormal = ModelSpec::normal_mean(0.0);

RunConfig config(benchmark::State& state, std::int64_t runs, std::int64_t n_max) {
  RunConfig cfg;
  cfg.seed = 1;
  cfg.runs = runs;
  cfg.n_max = n_max;
  cfg.execution = state.range(0) ? Execution::Parallel : Execution::Serial;
  cfg.workers = state.range(0) ? omp_get_max_threads() : 1;
  state.SetLabel(state.range(0) ? "parallel x" + std::to_string(cfg.workers) : "serial");
  return cfg;
}

void BM_GammaConst(benchmark::State& state) {
  const auto cfg = config(state, 200, 50000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_gamma_const(kGamma, EstimatorSpec::mom_gamma(1, 1), 10, 15, cfg));
  }
  state.SetItemsProcessed(state.iterations() * cfg.runs);
}
BENCHMARK(BM_GammaConst)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ArlGamma(benchmark::State& state) {
  const auto cfg = config(state, 20, 20000);
  const auto spec = DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 309);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_arl(spec, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.runs);
}
BENCHMARK(BM_ArlGamma)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DelayNormalMixture(benchmark::State& state) {
  const auto cfg = config(state, 2000, 25000);
  const auto spec = DetectorSpec::normal_mixture(kNormal, 0.0, 0.42626, 500);
  const double post[] = {1.0};
  for (auto _ : state) benchmark::DoNotOptimize(estimate_delay(spec, post, 1, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.runs);
}
BENCHMARK(BM_DelayNormalMixture)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Cost of step n with n live origins.
void BM_DetectorStep(benchmark::State& state) {
  const auto origins = state.range(0);
  const EstimatorSpec est = state.range(1) ? EstimatorSpec::mle_gamma() : EstimatorSpec::mom_gamma(1, 1);
  state.SetLabel(state.range(1) ? "mle" : "mom");
  RandomStream rng(3, 0);
  Detector base(DetectorSpec::srrs(kGamma, est, 1e300));
  for (std::int64_t i = 0; i < origins; ++i) base.step(rng.gamma(1.0).value);
  const double x = rng.gamma(1.0).value;
  for (auto _ : state) {
    state.PauseTiming();
    Detector det = base;
    state.ResumeTiming();
    det.step(x);
    benchmark::DoNotOptimize(det.r());
  }
}
BENCHMARK(BM_DetectorStep)->ArgsProduct({{100, 1000}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
