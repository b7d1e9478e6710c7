#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "schedloc/experiments.hpp"
#include "schedloc/pipeline.hpp"
#include "support.hpp"

using namespace schedloc;
using Catch::Approx;

namespace {

std::string base_config_json() {
  return R"({
    "geometry": {
      "anchors_m": [[0.0, 0.0], [10.33, 0.0], [4.90, 8.66]],
      "listener_true_m": [1.92, 2.42]
    },
    "clocks": {
      "listener": {"skew_ppm": 8.0, "jitter_var_ns2": 2.25},
      "anchors_default": {"skew_ppm": -5.0, "jitter_var_ns2": 2.25, "delay_err_sigma_ns": 3.3}
    },
    "noise": {"channel_var_ns2": 2.25},
    "schedule": {"order": [1, 2, 3, 2, 1, 3, 1], "delta_ms": 3.0},
    "n_batches": 60,
    "rng_seed": 42,
    "calibration": {"retrieval": true, "rls": true, "outlier_threshold_ns": 250.0},
    "estimation": {"sigma_ns": 3.0, "prior": {"anchor_std_m": 0.01, "listener_std_m": 10.0}},
    "output_dir": "out"
  })";
}

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "schedloc_pipeline_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing converts unit-suffixed keys") {
  const ExperimentConfig cfg = parse_config_json(base_config_json());
  CHECK(cfg.sim.geometry.num_anchors() == 3);
  CHECK(cfg.sim.clocks.listener.skew == Approx(8e-6).margin(1e-18));
  CHECK(cfg.sim.clocks.listener.jitter_var == Approx(2.25e-18).margin(1e-30));
  CHECK(cfg.sim.clocks.anchors[1].delay_err_sigma == Approx(3.3e-9).margin(1e-20));
  CHECK(cfg.sim.noise.channel_var == Approx(2.25e-18).margin(1e-30));
  CHECK(cfg.sim.schedule.nominal_delay == Approx(3e-3).margin(1e-15));
  CHECK(cfg.calibration.outlier_threshold == Approx(250e-9).margin(1e-18));
  CHECK(cfg.estimation.sigma == Approx(3e-9).margin(1e-20));
  CHECK(cfg.sim.rng_seed == 42);
  // Prior defaults to the true listener position when no mean is given.
  CHECK(cfg.listener_prior_center() == Vec2(1.92, 2.42));
}

TEST_CASE("config round trips through its JSON serialization") {
  const ExperimentConfig cfg = parse_config_json(base_config_json());
  const ExperimentConfig back = parse_config_json(config_to_json(cfg));
  // Unit rescaling costs at most one ulp per conversion.
  CHECK(back.sim.clocks.listener.skew == Approx(cfg.sim.clocks.listener.skew).epsilon(1e-14));
  CHECK(back.sim.schedule.order == cfg.sim.schedule.order);
  CHECK(back.calibration.outlier_threshold ==
        Approx(cfg.calibration.outlier_threshold).epsilon(1e-14));
  CHECK(back.estimation.sigma == Approx(cfg.estimation.sigma).epsilon(1e-14));
  CHECK(back.sim.n_batches == cfg.sim.n_batches);
}

TEST_CASE("config validation reports specific violations") {
  auto patched = [](const std::string& from, const std::string& to) {
    std::string text = base_config_json();
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
    return text;
  };

  CHECK_THROWS_WITH(parse_config_json("{"), Catch::Matchers::ContainsSubstring("JSON"));
  CHECK_THROWS_WITH(parse_config_json("{}"), Catch::Matchers::ContainsSubstring("geometry"));
  CHECK_THROWS_WITH(
      parse_config_json(patched("[[0.0, 0.0], [10.33, 0.0], [4.90, 8.66]]", "[[0,0],[10,0]]")),
      Catch::Matchers::ContainsSubstring("N >= 3"));
  CHECK_THROWS_WITH(
      parse_config_json(patched("[[0.0, 0.0], [10.33, 0.0], [4.90, 8.66]]",
                                "[[0,0],[5,5],[10,10]]")),
      Catch::Matchers::ContainsSubstring("collinear"));
  CHECK_THROWS_WITH(parse_config_json(patched("[1, 2, 3, 2, 1, 3, 1]", "[1, 1, 3]")),
                    Catch::Matchers::ContainsSubstring("repeated consecutive"));
  CHECK_THROWS_WITH(parse_config_json(patched("[1, 2, 3, 2, 1, 3, 1]", "[1, 2, 1, 2]")),
                    Catch::Matchers::ContainsSubstring("never transmits"));
  CHECK_THROWS_WITH(parse_config_json(patched("\"delta_ms\": 3.0", "\"delta_ms\": 0.0")),
                    Catch::Matchers::ContainsSubstring("delay"));
  CHECK_THROWS_WITH(parse_config_json(patched("\"jitter_var_ns2\": 2.25}", "\"jitter_var_ns2\": -1}")),
                    Catch::Matchers::ContainsSubstring("jitter"));
  CHECK_THROWS_WITH(parse_config_json(patched("\"n_batches\": 60", "\"n_batches\": 0")),
                    Catch::Matchers::ContainsSubstring("n_batches"));
  CHECK_THROWS_WITH(parse_config_json(patched("\"outlier_threshold_ns\": 250.0",
                                              "\"outlier_threshold_ns\": -5")),
                    Catch::Matchers::ContainsSubstring("outlier_threshold"));
}

TEST_CASE("calibration pipeline estimates the true relative skews") {
  ExperimentConfig cfg = parse_config_json(base_config_json());
  cfg.sim.n_batches = 300;
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.sim.schedule, 3);
  const std::vector<MeasurementBatch> batches = simulate_batches(cfg.sim, matrices);
  const CalibrationRun run = run_calibration(cfg, matrices, batches);

  REQUIRE(run.records.size() == batches.size());  // clean data, nothing rejected
  CHECK(run.fallback_batches == 0);
  CHECK(run.final_state.n_updates == 300);
  const Eigen::VectorXd theta_true = cfg.sim.clocks.relative_skews();
  CHECK((run.final_state.theta_hat - theta_true).cwiseAbs().maxCoeff() < 1e-6);
  // Trace rows are sequential and the covariance trace shrinks.
  REQUIRE(run.trace.size() == 300);
  CHECK(run.trace.front().n == 1);
  CHECK(run.trace.back().n == 300);
  CHECK(run.trace.back().trace_p < run.trace.front().trace_p);
}

TEST_CASE("calibration feature flags") {
  ExperimentConfig cfg = parse_config_json(base_config_json());
  cfg.sim.n_batches = 5;
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.sim.schedule, 3);
  const std::vector<MeasurementBatch> batches = simulate_batches(cfg.sim, matrices);

  SECTION("rls off leaves measurements untouched") {
    cfg.calibration.rls = false;
    const CalibrationRun run = run_calibration(cfg, matrices, batches);
    CHECK(run.trace.empty());
    for (std::size_t b = 0; b < batches.size(); ++b) {
      CHECK(run.records[b].y_cal == batches[b].y);
      CHECK(run.records[b].delta_used == batches[b].delta_actual);
    }
  }
  SECTION("retrieval off uses the nominal delay everywhere") {
    cfg.calibration.retrieval = false;
    const CalibrationRun run = run_calibration(cfg, matrices, batches);
    const Eigen::VectorXd nominal =
        Eigen::VectorXd::Constant(6, cfg.sim.schedule.nominal_delay);
    for (const auto& rec : run.records) CHECK(rec.delta_used == nominal);
  }
  SECTION("an all-outlier stream yields no records") {
    std::vector<MeasurementBatch> shifted = batches;
    for (auto& b : shifted) b.y.array() += 400e-9;
    const CalibrationRun run = run_calibration(cfg, matrices, shifted);
    CHECK(run.records.empty());
    CHECK(run.final_state.n_updates == 0);
    for (const auto& r : run.rejections) CHECK(r.rejected);
  }
}

TEST_CASE("calibration removes the skew bias in the mean") {
  ExperimentConfig cfg = parse_config_json(base_config_json());
  cfg.sim.n_batches = 10000;
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.sim.schedule, 3);
  const std::vector<MeasurementBatch> batches = simulate_batches(cfg.sim, matrices);
  const CalibrationRun run = run_calibration(cfg, matrices, batches);
  const Eigen::VectorXd theta_final = run.final_state.theta_hat;

  const RangeVector rho = ranges_from_geometry(cfg.sim.geometry);
  const Eigen::VectorXd base = matrices.s * rho.values / kSpeedOfLight;
  const double sigma = 3e-9;
  const int m = matrices.num_measurements();

  // Recalibrate everything with the converged estimate; the per-component
  // residual mean must vanish within 3σ/sqrt(n).
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (const MeasurementBatch& batch : batches) {
    const CalibratedBatch cal =
        calibrate_batch(batch, matrices, theta_final, batch.delta_actual);
    mean += cal.y_cal - base - batch.delta_actual;
  }
  mean /= static_cast<double>(batches.size());
  const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(batches.size()));
  for (int k = 0; k < m; ++k) CHECK(std::abs(mean[k]) <= tol);
}

TEST_CASE("localization pipeline and the file round trip agree bit-for-bit") {
  ExperimentConfig cfg = parse_config_json(base_config_json());
  cfg.sim.n_batches = 30;
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.sim.schedule, 3);
  const std::vector<MeasurementBatch> batches = simulate_batches(cfg.sim, matrices);
  const CalibrationRun calibration = run_calibration(cfg, matrices, batches);

  const auto dir = temp_dir();
  write_measurements_csv(dir / "m.csv", cfg.sim.schedule, batches);
  const std::vector<MeasurementBatch> batches_back =
      read_measurements_csv(dir / "m.csv", cfg.sim.schedule);
  const CalibrationRun calibration_file = run_calibration(cfg, matrices, batches_back);
  REQUIRE(calibration_file.records.size() == calibration.records.size());
  for (std::size_t i = 0; i < calibration.records.size(); ++i) {
    CHECK(calibration_file.records[i].y_cal == calibration.records[i].y_cal);
  }

  write_calibrated_csv(dir / "c.csv", cfg.sim.schedule, calibration.records);
  const std::vector<CalibratedRecord> records_back =
      read_calibrated_csv(dir / "c.csv", cfg.sim.schedule);

  const LocalizationRun mem = run_localization(cfg, matrices, calibration.records);
  const LocalizationRun file = run_localization(cfg, matrices, records_back);
  REQUIRE(mem.per_batch.size() == file.per_batch.size());
  for (std::size_t i = 0; i < mem.per_batch.size(); ++i) {
    CHECK(mem.per_batch[i].x_hat == file.per_batch[i].x_hat);
  }
  CHECK(mem.pooled.x_hat == file.pooled.x_hat);
  CHECK(mem.has_scatter_ellipse);

  // The calibrated pooled estimate lands near the truth.
  CHECK((mem.pooled.listener() - Vec2(1.92, 2.42)).norm() < 0.5);

  const std::string json = estimates_json(mem, EllipseKind::Simulated);
  CHECK(json.find("\"kind\": \"simulated\"") != std::string::npos);
  CHECK_THROWS_AS(run_localization(cfg, matrices, {}), DataError);
}

TEST_CASE("bound pipeline matches a direct fisher computation") {
  ExperimentConfig cfg = parse_config_json(base_config_json());
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.sim.schedule, 3);
  const BoundResult bound = run_bound(cfg, matrices);

  const Eigen::VectorXd x =
      stack_positions(cfg.sim.geometry.anchors, *cfg.sim.geometry.listener_true);
  const Eigen::MatrixXd j =
      fisher_information(x, matrices, cfg.estimation.sigma, cfg.make_prior());
  CHECK((bound.information - j).norm() <= 1e-12 * j.norm());
  CHECK(bound.ellipse.confidence == 0.99);
  CHECK(bound.ellipse.semi_major >= bound.ellipse.semi_minor);

  SECTION("listener-free config evaluates at the prior center") {
    ExperimentConfig blind = cfg;
    blind.sim.geometry.listener_true.reset();
    blind.estimation.listener_prior_mu = Vec2(4.0, 3.0);
    const BoundResult b2 = run_bound(blind, matrices);
    CHECK(b2.ellipse.center == Vec2(4.0, 3.0));
  }
}

TEST_CASE("calibration works without a listener position") {
  ExperimentConfig cfg = parse_config_json(base_config_json());
  cfg.sim.n_batches = 40;
  const ScheduleMatrices matrices = build_schedule_matrices(cfg.sim.schedule, 3);
  const std::vector<MeasurementBatch> batches = simulate_batches(cfg.sim, matrices);

  ExperimentConfig blind = cfg;
  blind.sim.geometry.listener_true.reset();
  const CalibrationRun run_blind = run_calibration(blind, matrices, batches);
  const CalibrationRun run_full = run_calibration(cfg, matrices, batches);
  REQUIRE(run_blind.records.size() == run_full.records.size());
  // Identical skew estimates: listener ranges never enter the residual.
  CHECK(run_blind.final_state.theta_hat == run_full.final_state.theta_hat);
}

TEST_CASE("fig6 preset wiring") {
  const ExperimentConfig cfg = fig6_experiment_config(1, 6);
  CHECK(cfg.sim.geometry.listener_true->x() == Approx(-1.53));
  CHECK(cfg.sim.schedule.order == std::vector<int>{1, 2, 3, 2, 1, 3, 1});
  CHECK(cfg.sim.schedule.nominal_delay == Approx(3e-3));
  CHECK(cfg.estimation.sigma == Approx(3e-9));
  CHECK(cfg.sim.clocks.listener.skew == 0.0);
  CHECK_THROWS_AS(fig6_experiment_config(2, 6), ConfigError);
  CHECK_THROWS_AS(run_figure("fig9", temp_dir(), 1), ConfigError);
}
