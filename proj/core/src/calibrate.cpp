#include "schedloc/calibrate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace schedloc {

RetrievedDelays apply_delay_retrieval(const MeasurementBatch& batch, double nominal_delta) {
  RetrievedDelays out;
  if (batch.has_delay_payload()) {
    out.delays = batch.delta_actual;
    out.fallback = false;
  } else {
    out.delays = Eigen::VectorXd::Constant(batch.y.size(), nominal_delta);
    out.fallback = true;
  }
  return out;
}

bool reject_outliers(const MeasurementBatch& batch, double threshold) {
  if (!(threshold >= 0.0)) {
    throw std::invalid_argument("outlier: threshold must be >= 0");
  }
  // The rule screens |y - Δ| against the transmitted delays; without the
  // payload it cannot be applied and the batch is kept. The retrieval
  // fallback flag already marks such batches.
  if (!batch.has_delay_payload()) return false;
  for (int k = 0; k < batch.y.size(); ++k) {
    if (std::abs(batch.y[k] - batch.delta_actual[k]) > threshold) return true;
  }
  return false;
}

Eigen::VectorXd skew_residual(const MeasurementBatch& batch, const ScheduleMatrices& matrices,
                              const RangeVector& rho, const Eigen::VectorXd& d_vec) {
  const int m = matrices.num_measurements();
  if (batch.y.size() != m || d_vec.size() != m) {
    throw std::invalid_argument("skew residual: measurement/delay length != M");
  }
  if (rho.values.size() != matrices.s.cols()) {
    throw std::invalid_argument("skew residual: range vector has wrong size");
  }
  const int n_pairs = matrices.num_pairs();
  const Eigen::VectorXd projected =
      matrices.s_pinv * (batch.y - d_vec) - rho.values / kSpeedOfLight;
  return projected.head(n_pairs);
}

RlsState RlsState::initial(int n_anchors) {
  RlsState state;
  state.theta_hat = Eigen::VectorXd::Zero(n_anchors);
  state.p = 1e6 * Eigen::MatrixXd::Identity(n_anchors, n_anchors);
  state.n_updates = 0;
  return state;
}

namespace {

// Innovation matrix I + G^T P G, regularized when nearly singular.
Eigen::MatrixXd innovation_matrix(const Eigen::MatrixXd& g, const Eigen::MatrixXd& p) {
  const int r = static_cast<int>(g.cols());
  Eigen::MatrixXd innov = Eigen::MatrixXd::Identity(r, r) + g.transpose() * p * g;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(innov);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 0.0 || sv[0] / sv[sv.size() - 1] > 1e12) {
    innov += 1e-12 * Eigen::MatrixXd::Identity(r, r);
  }
  return innov;
}

Eigen::MatrixXd rls_gain(const Eigen::MatrixXd& g, const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd innov = innovation_matrix(g, p);
  return p * g * innov.ldlt().solve(Eigen::MatrixXd::Identity(innov.rows(), innov.cols()));
}

}  // namespace

RlsState rls_update(const RlsState& state, const Eigen::MatrixXd& g, const Eigen::VectorXd& d_n) {
  const int n = static_cast<int>(state.theta_hat.size());
  if (g.rows() != n || g.cols() != d_n.size()) {
    throw std::invalid_argument("rls: dimension mismatch between state, G and d_n");
  }
  const Eigen::MatrixXd gain = rls_gain(g, state.p);
  RlsState next;
  next.theta_hat = state.theta_hat + gain * (d_n - g.transpose() * state.theta_hat);
  next.p = state.p - gain * g.transpose() * state.p;
  // Symmetrize against accumulation of round-off.
  next.p = 0.5 * (next.p + next.p.transpose());
  next.n_updates = state.n_updates + 1;
  return next;
}

std::vector<Eigen::MatrixXd> precompute_rls_gains(const Eigen::MatrixXd& g, int n_updates) {
  std::vector<Eigen::MatrixXd> gains;
  gains.reserve(static_cast<std::size_t>(n_updates));
  Eigen::MatrixXd p = 1e6 * Eigen::MatrixXd::Identity(g.rows(), g.rows());
  for (int i = 0; i < n_updates; ++i) {
    const Eigen::MatrixXd gain = rls_gain(g, p);
    p -= gain * g.transpose() * p;
    p = 0.5 * (p + p.transpose());
    gains.push_back(gain);
  }
  return gains;
}

CalibratedBatch calibrate_batch(const MeasurementBatch& batch, const ScheduleMatrices& matrices,
                                const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& d_vec,
                                Eigen::VectorXd d_n) {
  const int m = matrices.num_measurements();
  if (batch.y.size() != m || d_vec.size() != m) {
    throw std::invalid_argument("calibrate: measurement/delay length != M");
  }
  if (theta_hat.size() != matrices.n_anchors) {
    throw std::invalid_argument("calibrate: theta_hat length != N");
  }
  CalibratedBatch out;
  out.y_cal = batch.y - d_vec.asDiagonal() * (matrices.a * theta_hat);
  out.d_n = std::move(d_n);
  out.rejected = false;
  return out;
}

}  // namespace schedloc
