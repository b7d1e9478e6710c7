#include "schedloc/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace schedloc {

void NetworkGeometry::validate() const {
  const int n = num_anchors();
  if (n < 3) {
    throw std::invalid_argument("geometry: N >= 3 required, got " + std::to_string(n) + " anchors");
  }
  for (const auto& a : anchors) {
    if (!a.allFinite()) throw std::invalid_argument("geometry: non-finite anchor coordinate");
  }
  if (listener_true && !listener_true->allFinite()) {
    throw std::invalid_argument("geometry: non-finite listener coordinate");
  }

  // Collinearity: the centered anchor cloud must have two nonzero principal
  // extents. Coincident anchors degenerate the same way and are caught here.
  Eigen::MatrixXd centered(n, 2);
  Vec2 mean = Vec2::Zero();
  for (const auto& a : anchors) mean += a;
  mean /= static_cast<double>(n);
  for (int i = 0; i < n; ++i) centered.row(i) = (anchors[i] - mean).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[1] <= 1e-9 * sv[0]) {
    throw std::invalid_argument("geometry: anchors are collinear");
  }
}

int RangeVector::pair_index(int i, int j, int n_anchors) {
  if (i == j || i < 1 || j < 1 || i > n_anchors || j > n_anchors) {
    throw std::invalid_argument("range: invalid anchor pair (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
  }
  const int a = std::min(i, j) - 1;
  const int b = std::max(i, j) - 1;
  return a * n_anchors - a * (a + 1) / 2 + (b - a - 1);
}

Eigen::VectorXd stack_positions(const std::vector<Vec2>& anchors, const Vec2& listener) {
  const int n = static_cast<int>(anchors.size());
  Eigen::VectorXd x(2 * (n + 1));
  for (int i = 0; i < n; ++i) x.segment<2>(2 * i) = anchors[i];
  x.tail<2>() = listener;
  return x;
}

Eigen::VectorXd ranges_from_stacked(const Eigen::VectorXd& x, int n_anchors) {
  if (x.size() != 2 * (n_anchors + 1)) {
    throw std::invalid_argument("range: stacked position vector has wrong size");
  }
  const int n_pairs = RangeVector::num_pairs(n_anchors);
  Eigen::VectorXd rho(n_pairs + n_anchors);
  int idx = 0;
  for (int a = 0; a < n_anchors; ++a) {
    for (int b = a + 1; b < n_anchors; ++b) {
      rho[idx++] = (x.segment<2>(2 * a) - x.segment<2>(2 * b)).norm();
    }
  }
  const Vec2 listener = x.tail<2>();
  for (int i = 0; i < n_anchors; ++i) {
    rho[n_pairs + i] = (listener - x.segment<2>(2 * i).eval()).norm();
  }
  return rho;
}

Eigen::MatrixXd range_jacobian(const Eigen::VectorXd& x, int n_anchors) {
  const int n_pairs = RangeVector::num_pairs(n_anchors);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_pairs + n_anchors, 2 * (n_anchors + 1));
  int idx = 0;
  for (int a = 0; a < n_anchors; ++a) {
    for (int b = a + 1; b < n_anchors; ++b) {
      const Vec2 d = x.segment<2>(2 * a) - x.segment<2>(2 * b);
      const Vec2 unit = d / d.norm();
      jac.block<1, 2>(idx, 2 * a) = unit.transpose();
      jac.block<1, 2>(idx, 2 * b) = -unit.transpose();
      ++idx;
    }
  }
  const Vec2 listener = x.tail<2>();
  for (int i = 0; i < n_anchors; ++i) {
    const Vec2 d = listener - x.segment<2>(2 * i);
    const Vec2 unit = d / d.norm();
    jac.block<1, 2>(n_pairs + i, 2 * n_anchors) = unit.transpose();
    jac.block<1, 2>(n_pairs + i, 2 * i) = -unit.transpose();
  }
  return jac;
}

RangeVector ranges_from_geometry(const NetworkGeometry& geom) {
  geom.validate();
  if (!geom.listener_true) {
    throw std::invalid_argument("range: listener position required to compute listener ranges");
  }
  RangeVector rho;
  rho.n_anchors = geom.num_anchors();
  rho.values = ranges_from_stacked(stack_positions(geom.anchors, *geom.listener_true),
                                   geom.num_anchors());
  for (int k = 0; k < rho.values.size(); ++k) {
    if (rho.values[k] <= 0.0) {
      throw std::invalid_argument("range: zero range (coincident nodes) at index " +
                                  std::to_string(k));
    }
  }
  return rho;
}

}  // namespace schedloc
