#pragma once

#include <Eigen/Dense>

#include <vector>

#include "schedloc/geometry.hpp"

namespace schedloc {

/// Broadcast order of the anchors. Consecutive entries order[k] -> order[k+1]
/// are the transmission pairs; each pair yields one listener TDOA
/// measurement, so a schedule of length M+1 produces M measurements.
struct Schedule {
  std::vector<int> order;      // anchor ids, 1..N
  double nominal_delay = 0.0;  // δ, seconds

  int num_measurements() const { return static_cast<int>(order.size()) - 1; }

  /// Throws std::invalid_argument on: length < 2, a node following itself,
  /// an anchor id outside 1..N, an anchor that never transmits, or a
  /// non-positive nominal delay.
  void validate(int n_anchors) const;
};

struct ScheduleDiagnosis {
  bool valid = false;
  int kernel_dim = 0;
};

/// Row k has +1 at column rho_ij, -1 at rho_iL, +1 at rho_jL for the pair
/// i = order[k], j = order[k+1]; columns follow the canonical RangeVector
/// ordering.
Eigen::MatrixXd build_s_matrix(const Schedule& schedule, int n_anchors);

/// Numerical-rank diagnosis of a schedule matrix. Valid iff the kernel is
/// one-dimensional and spanned by the kernel vector u.
ScheduleDiagnosis validate_schedule(const Eigen::MatrixXd& s, int n_anchors);

/// Diagonal 0/1 projector: identity on the anchor-pair block, zero on the
/// listener block.
Eigen::MatrixXd build_projector(int n_anchors);

/// u = [0 ... 0, 1 ... 1]: a common offset on all listener ranges is
/// unobservable, S u = 0 for every schedule.
Eigen::VectorXd kernel_vector(int n_anchors);

/// Moore-Penrose pseudoinverse via SVD with singular-value cutoff
/// max(rows, cols) * machine_eps * sigma_max.
Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m);

/// A: M x N selection matrix with A(k, order[k+1]-1) = 1. Measurement k
/// embeds the delay generated by the second sender of its pair, which waited
/// between receiving the previous message and transmitting its own.
Eigen::MatrixXd sender_selection_matrix(const Schedule& schedule, int n_anchors);

/// Precomputed linear algebra for one schedule. Immutable after
/// construction; safe to share across threads.
struct ScheduleMatrices {
  Eigen::MatrixXd s;          // M x (num_pairs + N)
  Eigen::MatrixXd s_pinv;     // (num_pairs + N) x M
  Eigen::MatrixXd pi;         // projector
  Eigen::VectorXd u;          // kernel basis vector
  Eigen::MatrixXd a;          // sender selection, M x N
  Eigen::MatrixXd g_nominal;  // G for delays = δ·1
  int n_anchors = 0;

  int num_measurements() const { return static_cast<int>(s.rows()); }
  int num_pairs() const { return RangeVector::num_pairs(n_anchors); }
};

/// Builds the full matrix set. Throws std::invalid_argument when the
/// schedule violates its invariants or its kernel dimension is not 1.
ScheduleMatrices build_schedule_matrices(const Schedule& schedule, int n_anchors);

/// G (N x num_pairs), so that G^T θ equals the anchor-pair block of
/// Π S⁺ Diag(delays) A θ. With dynamic delay retrieval the delays vary per
/// batch; Π S⁺ is reused from the precomputed set.
Eigen::MatrixXd build_g_matrix(const ScheduleMatrices& matrices, const Schedule& schedule,
                               const Eigen::VectorXd& delays);

/// Vertically stacks `passes` repetitions of the schedule's matrix set, as
/// used when estimating from several schedule passes jointly. The stacked
/// set is rebuilt consistently (pseudoinverse included).
ScheduleMatrices stack_passes(const ScheduleMatrices& matrices, int passes);

}  // namespace schedloc
