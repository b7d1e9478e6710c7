#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedloc/calibrate.hpp"
#include "schedloc/estimate.hpp"
#include "schedloc/simulate.hpp"

namespace schedloc {

/// Invalid or inconsistent configuration. CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data files. CLI exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that parses back to the identical double, so CSV
/// round trips are lossless.
std::string format_double(double value);

// Measurement CSV, column order fixed:
//   batch,k,sender,next_sender,y_seconds,delta_actual_seconds
// The same schema is the ingestion path for captured data; the delay field
// is left empty when the payload is missing.
void write_measurements_csv(const std::filesystem::path& path, const Schedule& schedule,
                            const std::vector<MeasurementBatch>& batches);
std::vector<MeasurementBatch> read_measurements_csv(const std::filesystem::path& path,
                                                    const Schedule& schedule);

/// One calibrated schedule pass.
struct CalibratedRecord {
  int batch = 0;
  Eigen::VectorXd y_cal;
  Eigen::VectorXd delta_used;
};

// Calibrated CSV: batch,k,sender,next_sender,y_cal_seconds,delta_used_seconds
void write_calibrated_csv(const std::filesystem::path& path, const Schedule& schedule,
                          const std::vector<CalibratedRecord>& records);
std::vector<CalibratedRecord> read_calibrated_csv(const std::filesystem::path& path,
                                                  const Schedule& schedule);

/// One RLS update, the data behind convergence plots.
struct RlsTraceRow {
  int n = 0;
  Eigen::VectorXd theta_hat;
  double trace_p = 0.0;
};

// Trace CSV: n,theta_hat_1..theta_hat_N,trace_P
void write_rls_trace_csv(const std::filesystem::path& path,
                         const std::vector<RlsTraceRow>& trace);

struct RejectionRecord {
  int batch = 0;
  bool rejected = false;
  double max_abs_dev = 0.0;  // max_k |y_k - Δ_k|, s
};

// Rejection log CSV: batch,rejected,max_abs_dev_ns
void write_rejections_csv(const std::filesystem::path& path,
                          const std::vector<RejectionRecord>& rejections);

/// Headerless row-major CSV, for matrix debugging.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

enum class EllipseKind { Hcrb, Simulated, MapExperimental };
std::string ellipse_kind_name(EllipseKind kind);

/// {"center":[x,y],"semi_axes":[a,b],"orientation_rad":..,"confidence":..,
///  "kind":"hcrb"|"simulated"|"map_experimental"}
std::string ellipse_json(const ErrorEllipse& ellipse, EllipseKind kind);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace schedloc
