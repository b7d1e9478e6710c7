#pragma once

#include <vector>

#include "schedloc/schedule.hpp"
#include "schedloc/simulate.hpp"

namespace schedloc {

inline constexpr double kDefaultOutlierThreshold = 100e-9;  // s

struct RetrievedDelays {
  Eigen::VectorXd delays;
  bool fallback = false;  // payload missing, nominal δ substituted
};

/// Dynamic delay retrieval: the per-measurement delays transmitted as
/// payload replace the nominal δ·1 downstream, removing the ε contribution.
/// Falls back to δ·1 (flagged) when the payload is missing.
RetrievedDelays apply_delay_retrieval(const MeasurementBatch& batch, double nominal_delta);

/// All-or-nothing screening of a schedule pass: discard when any
/// |y_k − Δ_k| exceeds the threshold.
bool reject_outliers(const MeasurementBatch& batch, double threshold);

/// d_n = Π'(S⁺(y − D) − ρ/c), the anchor-pair block of the projected
/// residual; E[d_n] = G^T θ. Only the anchor-pair block of rho matters: the
/// projection annihilates the listener ranges, so rho may carry zeros there
/// when the listener position is unknown.
Eigen::VectorXd skew_residual(const MeasurementBatch& batch, const ScheduleMatrices& matrices,
                              const RangeVector& rho, const Eigen::VectorXd& d_vec);

/// Recursive least-squares state over the relative skews.
struct RlsState {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd p;  // covariance-form recursion state P_n
  int n_updates = 0;

  /// Diffuse start: θ̂ = 0, P = 1e6·I.
  static RlsState initial(int n_anchors);
};

/// One RLS step with unit forgetting factor:
///   K = P G (I + G^T P G)^{-1},  θ̂ += K (d_n − G^T θ̂),  P = (I − K G^T) P.
/// The innovation matrix is regularized when ill-conditioned.
RlsState rls_update(const RlsState& state, const Eigen::MatrixXd& g, const Eigen::VectorXd& d_n);

/// With a fixed G the gain sequence does not depend on the data; returns
/// K_1..K_n for the precomputed-gain path.
std::vector<Eigen::MatrixXd> precompute_rls_gains(const Eigen::MatrixXd& g, int n_updates);

struct CalibratedBatch {
  Eigen::VectorXd y_cal;
  Eigen::VectorXd d_n;  // skew-residual observation; empty when rejected
  bool rejected = false;
};

/// Removes the estimated skew bias Diag(d_vec) A θ̂ from the measurements.
/// The residual model of y_cal is (1/c) S ρ + D + w. The common-scale term
/// (1/c) ϑ_L S ρ is left in place; it is sub-picosecond at crystal skews.
/// d_n, when supplied by the caller (it needs the anchor ranges), is carried
/// through into the result.
CalibratedBatch calibrate_batch(const MeasurementBatch& batch, const ScheduleMatrices& matrices,
                                const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& d_vec,
                                Eigen::VectorXd d_n = Eigen::VectorXd());

}  // namespace schedloc
