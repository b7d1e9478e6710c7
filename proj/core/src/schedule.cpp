#include "schedloc/schedule.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "schedloc/clock.hpp"

namespace schedloc {

void Schedule::validate(int n_anchors) const {
  if (order.size() < 2) {
    throw std::invalid_argument("schedule: at least two transmissions required");
  }
  if (!(nominal_delay > 0.0)) {
    throw std::invalid_argument("schedule: nominal delay must be positive");
  }
  std::vector<bool> seen(static_cast<std::size_t>(n_anchors), false);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int id = order[k];
    if (id < 1 || id > n_anchors) {
      throw std::invalid_argument("schedule: anchor id " + std::to_string(id) +
                                  " outside 1.." + std::to_string(n_anchors));
    }
    if (k > 0 && order[k] == order[k - 1]) {
      throw std::invalid_argument("schedule: repeated consecutive sender at position " +
                                  std::to_string(k));
    }
    seen[static_cast<std::size_t>(id - 1)] = true;
  }
  for (int i = 0; i < n_anchors; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw std::invalid_argument("schedule: anchor " + std::to_string(i + 1) +
                                  " never transmits");
    }
  }
}

Eigen::MatrixXd build_s_matrix(const Schedule& schedule, int n_anchors) {
  schedule.validate(n_anchors);
  const int m = schedule.num_measurements();
  const int n_pairs = RangeVector::num_pairs(n_anchors);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, n_pairs + n_anchors);
  for (int k = 0; k < m; ++k) {
    const int i = schedule.order[static_cast<std::size_t>(k)];
    const int j = schedule.order[static_cast<std::size_t>(k) + 1];
    s(k, RangeVector::pair_index(i, j, n_anchors)) = 1.0;
    s(k, n_pairs + i - 1) = -1.0;
    s(k, n_pairs + j - 1) = 1.0;
  }
  return s;
}

ScheduleDiagnosis validate_schedule(const Eigen::MatrixXd& s, int n_anchors) {
  const int cols = static_cast<int>(s.cols());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-9 * sv[0];
  int rank = 0;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv[k] > cutoff) ++rank;
  }
  ScheduleDiagnosis diag;
  diag.kernel_dim = cols - rank;
  const Eigen::VectorXd u = kernel_vector(n_anchors);
  const bool u_in_kernel = (s * u).isZero(0.0);
  diag.valid = diag.kernel_dim == 1 && u_in_kernel;
  return diag;
}

Eigen::MatrixXd build_projector(int n_anchors) {
  if (n_anchors < 3) throw std::invalid_argument("projector: N >= 3 required");
  const int n_pairs = RangeVector::num_pairs(n_anchors);
  Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(n_pairs + n_anchors, n_pairs + n_anchors);
  pi.topLeftCorner(n_pairs, n_pairs).setIdentity();
  return pi;
}

Eigen::VectorXd kernel_vector(int n_anchors) {
  const int n_pairs = RangeVector::num_pairs(n_anchors);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n_pairs + n_anchors);
  u.tail(n_anchors).setOnes();
  return u;
}

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw std::invalid_argument("pseudoinverse: non-finite input");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double eps = std::numeric_limits<double>::epsilon();
  const double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) * eps * sv[0];
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (int k = 0; k < sv.size(); ++k) {
    if (sv[k] > cutoff) inv_sv[k] = 1.0 / sv[k];
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd sender_selection_matrix(const Schedule& schedule, int n_anchors) {
  const int m = schedule.num_measurements();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n_anchors);
  for (int k = 0; k < m; ++k) {
    a(k, schedule.order[static_cast<std::size_t>(k) + 1] - 1) = 1.0;
  }
  return a;
}

ScheduleMatrices build_schedule_matrices(const Schedule& schedule, int n_anchors) {
  ScheduleMatrices out;
  out.n_anchors = n_anchors;
  out.s = build_s_matrix(schedule, n_anchors);
  const ScheduleDiagnosis diag = validate_schedule(out.s, n_anchors);
  if (!diag.valid) {
    throw std::invalid_argument("schedule: invalid (kernel dimension " +
                                std::to_string(diag.kernel_dim) + ", expected 1)");
  }
  out.s_pinv = pseudoinverse(out.s);
  out.pi = build_projector(n_anchors);
  out.u = kernel_vector(n_anchors);
  out.a = sender_selection_matrix(schedule, n_anchors);
  const Eigen::VectorXd nominal =
      Eigen::VectorXd::Constant(schedule.num_measurements(), schedule.nominal_delay);
  out.g_nominal = build_g_matrix(out, schedule, nominal);
  return out;
}

Eigen::MatrixXd build_g_matrix(const ScheduleMatrices& matrices, const Schedule& schedule,
                               const Eigen::VectorXd& delays) {
  const int m = schedule.num_measurements();
  if (delays.size() != m) {
    throw std::invalid_argument("g matrix: delays length " + std::to_string(delays.size()) +
                                " != M = " + std::to_string(m));
  }
  if (matrices.s.rows() != m) {
    throw std::invalid_argument("g matrix: schedule and matrices disagree on M");
  }
  const int n_pairs = matrices.num_pairs();
  // G^T = Π' S⁺ Diag(delays) A, Π' the anchor-pair rows of Π.
  const Eigen::MatrixXd gt =
      matrices.s_pinv.topRows(n_pairs) * delays.asDiagonal() * matrices.a;
  return gt.transpose();
}

ScheduleMatrices stack_passes(const ScheduleMatrices& matrices, int passes) {
  if (passes < 1) throw std::invalid_argument("stack_passes: passes >= 1 required");
  if (passes == 1) return matrices;
  const int m = matrices.num_measurements();
  ScheduleMatrices out;
  out.n_anchors = matrices.n_anchors;
  out.s.resize(m * passes, matrices.s.cols());
  out.a.resize(m * passes, matrices.a.cols());
  for (int p = 0; p < passes; ++p) {
    out.s.middleRows(p * m, m) = matrices.s;
    out.a.middleRows(p * m, m) = matrices.a;
  }
  out.s_pinv = pseudoinverse(out.s);
  out.pi = matrices.pi;
  out.u = matrices.u;
  out.g_nominal = matrices.g_nominal;  // per-pass G is unchanged by stacking
  return out;
}

}  // namespace schedloc
