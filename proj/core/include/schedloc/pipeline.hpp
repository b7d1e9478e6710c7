#pragma once

#include <string>
#include <vector>

#include "schedloc/config.hpp"
#include "schedloc/io.hpp"

namespace schedloc {

struct CalibrationRun {
  std::vector<CalibratedRecord> records;    // kept batches, input order
  std::vector<RejectionRecord> rejections;  // one entry per input batch
  std::vector<RlsTraceRow> trace;
  RlsState final_state;
  int fallback_batches = 0;  // delay payload missing, nominal δ substituted
};

/// Front-to-back calibration of a batch stream: retrieval, outlier
/// screening, skew residual, RLS update, bias removal with the freshly
/// updated estimate. Rejected batches produce no RLS update and no record.
CalibrationRun run_calibration(const ExperimentConfig& config, const ScheduleMatrices& matrices,
                               const std::vector<MeasurementBatch>& batches);

struct LocalizationRun {
  std::vector<PositionEstimate> per_batch;
  std::vector<int> batch_ids;
  PositionEstimate pooled;           // MAP over all batches stacked
  ErrorEllipse scatter_ellipse;      // 99% over the per-batch listener estimates
  bool has_scatter_ellipse = false;  // needs at least three estimates
  int non_converged = 0;
};

LocalizationRun run_localization(const ExperimentConfig& config, const ScheduleMatrices& matrices,
                                 const std::vector<CalibratedRecord>& records);

struct BoundResult {
  Eigen::MatrixXd information;   // J = J^D + Pr^{-1}
  Eigen::Matrix2d listener_cov;  // listener block of J^{-1}
  ErrorEllipse ellipse;          // 99%
};

/// HCRB for one schedule pass, evaluated at listener_true when known,
/// otherwise at the prior center.
BoundResult run_bound(const ExperimentConfig& config, const ScheduleMatrices& matrices);

std::string estimates_json(const LocalizationRun& run, EllipseKind kind);
std::string bound_json(const BoundResult& bound);

}  // namespace schedloc
