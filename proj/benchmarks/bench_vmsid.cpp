#include <benchmark/benchmark.h>

#include "vmsid/deviation.hpp"
#include "vmsid/experiments.hpp"
#include "vmsid/input_design.hpp"

using namespace vmsid;

namespace {

Mat random_psd(int d, Rng& rng) {
  Mat M(d, d);
  for (int i = 0; i < M.size(); ++i) M.data()[i] = rng.gaussian();
  return M.transpose() * M;
}

SignalLog canonical_window(long T, Rng& rng) {
  Mat U(1, T);
  for (long k = 0; k < T; ++k) U(0, k) = rng.uniform(-1, 1);
  return simulate(canonical_model(), canonical_x0(), U, NoiseSpec{});
}

}  // namespace

static void BM_NoiseFreeEstimate(benchmark::State& st) {
  Rng rng(1);
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  auto log = canonical_window(cfg.window(), rng);
  for (auto _ : st) benchmark::DoNotOptimize(estimate_markov_noise_free(log.y, log.u, cfg));
}
BENCHMARK(BM_NoiseFreeEstimate);

static void BM_HoKalman(benchmark::State& st) {
  auto G = markov_true(canonical_model(), 9);
  for (auto _ : st) benchmark::DoNotOptimize(ho_kalman(G, 4));
}
BENCHMARK(BM_HoKalman);

static void BM_BoxQPExact(benchmark::State& st) {
  Rng rng(2);
  Mat H = random_psd(static_cast<int>(st.range(0)), rng);
  for (auto _ : st) benchmark::DoNotOptimize(box_qp_exact(H, 0.1));
}
BENCHMARK(BM_BoxQPExact)->Arg(8)->Arg(12)->Arg(16);

static void BM_BoxQPRelaxed(benchmark::State& st) {
  Rng rng(3);
  Mat H = random_psd(static_cast<int>(st.range(0)), rng);
  for (auto _ : st) benchmark::DoNotOptimize(box_qp_relaxed(H, 0.1));
}
BENCHMARK(BM_BoxQPRelaxed)->Arg(8)->Arg(17)->Arg(49);

static void BM_MaxDeviation(benchmark::State& st) {
  Rng rng(4);
  auto cfg = EstimatorConfig::defaults(4, 1, 1);
  auto log = canonical_window(cfg.window(), rng);
  for (auto _ : st) benchmark::DoNotOptimize(max_deviation(log.y, log.u, cfg, 0.05, Method::relaxed));
}
BENCHMARK(BM_MaxDeviation);

static void BM_DesignStep(benchmark::State& st) {
  Rng rng(5);
  auto est = EstimatorConfig::defaults(4, 1, 1);
  auto log = canonical_window(est.window(), rng);
  DesignContext ctx;
  ctx.L = build_L(log.y, log.u, 0, est.h, est.t);
  ctx.Gamma = target_row(log.y, 0, est.h, est.t, est.s()) * pinv(ctx.L);
  ctx.est = est;
  ctx.lo = -5.0;
  ctx.hi = 5.0;
  DesignConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(design_input_step(ctx, cfg));
}
BENCHMARK(BM_DesignStep);

static void BM_ClosedLoopTrial(benchmark::State& st) {
  auto cfg = ExperimentConfig::canonical_preset();
  cfg.N_schedule = {static_cast<int>(st.range(0))};
  InputMode mode = st.range(1) ? InputMode::designed : InputMode::white_noise;
  for (auto _ : st) benchmark::DoNotOptimize(run_trial(cfg, 0, mode));
}
BENCHMARK(BM_ClosedLoopTrial)->Args({10, 1})->Args({10, 0})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
