#include "schedloc/pipeline.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace schedloc {

namespace {

// Ranges used by inline calibration: anchor pairs from the surveyed anchor
// positions. The listener block is never read by the skew residual (the
// projection slices it away), so zeros stand in when the position is
// unknown.
RangeVector calibration_ranges(const NetworkGeometry& geometry) {
  if (geometry.listener_true) return ranges_from_geometry(geometry);
  RangeVector rho;
  rho.n_anchors = geometry.num_anchors();
  rho.values = Eigen::VectorXd::Zero(rho.size());
  int idx = 0;
  for (int a = 0; a < rho.n_anchors; ++a) {
    for (int b = a + 1; b < rho.n_anchors; ++b) {
      rho.values[idx++] = (geometry.anchors[static_cast<std::size_t>(a)] -
                           geometry.anchors[static_cast<std::size_t>(b)])
                              .norm();
    }
  }
  return rho;
}

}  // namespace

CalibrationRun run_calibration(const ExperimentConfig& config, const ScheduleMatrices& matrices,
                               const std::vector<MeasurementBatch>& batches) {
  config.validate();
  const Schedule& schedule = config.sim.schedule;
  const double nominal = schedule.nominal_delay;
  const RangeVector rho = calibration_ranges(config.sim.geometry);

  CalibrationRun run;
  run.final_state = RlsState::initial(matrices.n_anchors);

  for (std::size_t i = 0; i < batches.size(); ++i) {
    const MeasurementBatch& batch = batches[i];

    Eigen::VectorXd d_vec;
    if (config.calibration.retrieval) {
      const RetrievedDelays retrieved = apply_delay_retrieval(batch, nominal);
      d_vec = retrieved.delays;
      if (retrieved.fallback) ++run.fallback_batches;
    } else {
      d_vec = Eigen::VectorXd::Constant(batch.y.size(), nominal);
    }

    RejectionRecord rejection;
    rejection.batch = static_cast<int>(i);
    rejection.rejected = reject_outliers(batch, config.calibration.outlier_threshold);
    rejection.max_abs_dev = batch.has_delay_payload()
                                ? (batch.y - batch.delta_actual).cwiseAbs().maxCoeff()
                                : std::nan("");
    run.rejections.push_back(rejection);
    if (rejection.rejected) continue;

    CalibratedRecord record;
    record.batch = static_cast<int>(i);
    record.delta_used = d_vec;

    Eigen::VectorXd d_n = skew_residual(batch, matrices, rho, d_vec);
    if (config.calibration.rls) {
      const Eigen::MatrixXd g = config.calibration.retrieval
                                    ? build_g_matrix(matrices, schedule, d_vec)
                                    : matrices.g_nominal;
      run.final_state = rls_update(run.final_state, g, d_n);
      run.trace.push_back({run.final_state.n_updates, run.final_state.theta_hat,
                           run.final_state.p.trace()});
    }

    CalibratedBatch calibrated =
        calibrate_batch(batch, matrices, run.final_state.theta_hat, d_vec, std::move(d_n));
    record.y_cal = std::move(calibrated.y_cal);
    run.records.push_back(std::move(record));
  }
  return run;
}

LocalizationRun run_localization(const ExperimentConfig& config, const ScheduleMatrices& matrices,
                                 const std::vector<CalibratedRecord>& records) {
  config.validate();
  if (records.empty()) throw DataError("localize: no calibrated batches");
  const Prior prior = config.make_prior();

  LocalizationRun run;
  for (const CalibratedRecord& record : records) {
    PositionEstimate est = map_estimate(record.y_cal, record.delta_used, matrices, prior);
    if (!est.converged) ++run.non_converged;
    run.batch_ids.push_back(record.batch);
    run.per_batch.push_back(std::move(est));
  }

  const int m = matrices.num_measurements();
  const int count = static_cast<int>(records.size());
  Eigen::VectorXd y_all(m * count);
  Eigen::VectorXd d_all(m * count);
  for (int i = 0; i < count; ++i) {
    y_all.segment(i * m, m) = records[static_cast<std::size_t>(i)].y_cal;
    d_all.segment(i * m, m) = records[static_cast<std::size_t>(i)].delta_used;
  }
  const ScheduleMatrices stacked = stack_passes(matrices, count);
  run.pooled = map_estimate(y_all, d_all, stacked, prior);

  if (count >= 3) {
    Vec2 mean = Vec2::Zero();
    for (const auto& est : run.per_batch) mean += est.listener();
    mean /= static_cast<double>(count);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& est : run.per_batch) {
      const Vec2 d = est.listener() - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(count - 1);
    run.scatter_ellipse = error_ellipse(cov, mean, 0.99);
    run.has_scatter_ellipse = true;
  }
  return run;
}

BoundResult run_bound(const ExperimentConfig& config, const ScheduleMatrices& matrices) {
  config.validate();
  const Vec2 point = config.sim.geometry.listener_true ? *config.sim.geometry.listener_true
                                                       : config.listener_prior_center();
  const Eigen::VectorXd x = stack_positions(config.sim.geometry.anchors, point);
  const Prior prior = config.make_prior();

  BoundResult bound;
  bound.information = fisher_information(x, matrices, config.estimation.sigma, prior);
  const Eigen::MatrixXd cov = bound.information.ldlt().solve(
      Eigen::MatrixXd::Identity(bound.information.rows(), bound.information.cols()));
  bound.listener_cov = cov.bottomRightCorner<2, 2>();
  bound.ellipse = error_ellipse(bound.listener_cov, point, 0.99);
  return bound;
}

namespace {

nlohmann::json ellipse_node(const ErrorEllipse& e, EllipseKind kind) {
  return nlohmann::json::parse(ellipse_json(e, kind));
}

nlohmann::json estimate_node(const PositionEstimate& est) {
  const Vec2 p = est.listener();
  return nlohmann::json{{"center", {p.x(), p.y()}},
                        {"cost", est.cost},
                        {"iterations", est.iterations},
                        {"converged", est.converged}};
}

}  // namespace

std::string estimates_json(const LocalizationRun& run, EllipseKind kind) {
  nlohmann::json root;
  root["kind"] = ellipse_kind_name(kind);
  root["pooled"] = estimate_node(run.pooled);
  nlohmann::json per_batch = nlohmann::json::array();
  for (std::size_t i = 0; i < run.per_batch.size(); ++i) {
    nlohmann::json node = estimate_node(run.per_batch[i]);
    node["batch"] = run.batch_ids[i];
    per_batch.push_back(std::move(node));
  }
  root["per_batch"] = std::move(per_batch);
  root["non_converged"] = run.non_converged;
  if (run.has_scatter_ellipse) {
    root["ellipse"] = ellipse_node(run.scatter_ellipse, kind);
  }
  return root.dump(2);
}

std::string bound_json(const BoundResult& bound) {
  nlohmann::json root;
  root["ellipse"] = ellipse_node(bound.ellipse, EllipseKind::Hcrb);
  root["listener_cov_m2"] = {{bound.listener_cov(0, 0), bound.listener_cov(0, 1)},
                             {bound.listener_cov(1, 0), bound.listener_cov(1, 1)}};
  return root.dump(2);
}

}  // namespace schedloc
