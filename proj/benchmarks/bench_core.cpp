#include <benchmark/benchmark.h>

#include "schedloc/calibrate.hpp"
#include "schedloc/estimate.hpp"
#include "schedloc/simulate.hpp"

namespace {

using namespace schedloc;

SimConfig bench_config() {
  SimConfig cfg;
  cfg.geometry.anchors = {Vec2(0.0, 0.0), Vec2(10.33, 0.0), Vec2(4.90, 8.66)};
  cfg.geometry.listener_true = Vec2(1.92, 2.42);
  cfg.clocks.listener = ClockParams{8e-6, 2.25e-18, 0.0};
  cfg.clocks.anchors.assign(3, ClockParams{-5e-6, 2.25e-18, 3.3e-9});
  cfg.noise.channel_var = 2.25e-18;
  cfg.schedule = Schedule{{1, 2, 3, 2, 1, 3, 1}, 3e-3};
  cfg.rng_seed = 1;
  return cfg;
}

void BM_BuildScheduleMatrices(benchmark::State& state) {
  const Schedule schedule{{1, 2, 3, 2, 1, 3, 1}, 3e-3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_schedule_matrices(schedule, 3));
  }
}
BENCHMARK(BM_BuildScheduleMatrices);

void BM_SimulateBatch(benchmark::State& state) {
  const SimConfig cfg = bench_config();
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.schedule, 3);
  std::uint64_t index = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_batch(cfg, matrices, index++));
  }
}
BENCHMARK(BM_SimulateBatch);

void BM_SkewResidualAndRlsUpdate(benchmark::State& state) {
  const SimConfig cfg = bench_config();
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.schedule, 3);
  const RangeVector rho = ranges_from_geometry(cfg.geometry);
  const MeasurementBatch batch = simulate_batch(cfg, matrices, 0);
  RlsState rls = RlsState::initial(3);
  for (auto _ : state) {
    const Eigen::VectorXd d_n = skew_residual(batch, matrices, rho, batch.delta_actual);
    rls = rls_update(rls, matrices.g_nominal, d_n);
    benchmark::DoNotOptimize(rls);
  }
}
BENCHMARK(BM_SkewResidualAndRlsUpdate);

void BM_MapEstimateSinglePass(benchmark::State& state) {
  SimConfig cfg = bench_config();
  cfg.clocks.listener.skew = 0.0;
  for (auto& c : cfg.clocks.anchors) c = ClockParams{0.0, 2.25e-18, 0.0};
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.schedule, 3);
  const Prior prior =
      make_gaussian_prior(cfg.geometry.anchors, *cfg.geometry.listener_true, 0.01, 10.0);
  const Eigen::VectorXd d_vec =
      Eigen::VectorXd::Constant(matrices.num_measurements(), cfg.schedule.nominal_delay);
  const MeasurementBatch batch = simulate_batch(cfg, matrices, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(map_estimate(batch.y, d_vec, matrices, prior));
  }
}
BENCHMARK(BM_MapEstimateSinglePass);

void BM_HcrbListenerEllipse(benchmark::State& state) {
  const SimConfig cfg = bench_config();
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.schedule, 3);
  const Prior prior =
      make_gaussian_prior(cfg.geometry.anchors, *cfg.geometry.listener_true, 0.01, 10.0);
  const Eigen::VectorXd x = stack_positions(cfg.geometry.anchors, *cfg.geometry.listener_true);
  for (auto _ : state) {
    const Eigen::MatrixXd j = fisher_information(x, matrices, 3e-9, prior);
    const Eigen::MatrixXd cov = j.ldlt().solve(Eigen::MatrixXd::Identity(j.rows(), j.cols()));
    benchmark::DoNotOptimize(error_ellipse(cov.bottomRightCorner<2, 2>(),
                                           *cfg.geometry.listener_true, 0.99));
  }
}
BENCHMARK(BM_HcrbListenerEllipse);

}  // namespace

BENCHMARK_MAIN();
