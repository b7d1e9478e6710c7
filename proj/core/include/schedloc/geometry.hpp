#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace schedloc {

/// Speed of light in vacuum, m/s.
inline constexpr double kSpeedOfLight = 299792458.0;

using Vec2 = Eigen::Vector2d;

enum class NodeRole { Anchor, Listener };

/// Network node label. Anchors are indexed 1..N; there is exactly one
/// passive listener per network.
struct NodeId {
  int index = 0;
  NodeRole role = NodeRole::Anchor;
};

/// Anchor layout plus, when known, the true listener position. The listener
/// position is absent when ingesting captured data.
struct NetworkGeometry {
  std::vector<Vec2> anchors;
  std::optional<Vec2> listener_true;

  int num_anchors() const { return static_cast<int>(anchors.size()); }

  /// Throws std::invalid_argument when the layout cannot support planar
  /// localization: fewer than three anchors, collinear or coincident
  /// anchors, non-finite coordinates.
  void validate() const;
};

/// Pairwise ranges in the canonical ordering: anchor pairs (1,2), (1,3), ...,
/// (N-1,N) lexicographically, followed by listener-anchor ranges L1..LN.
/// All values in meters. This ordering fixes the column layout of the
/// schedule matrix.
struct RangeVector {
  Eigen::VectorXd values;
  int n_anchors = 0;

  static int num_pairs(int n_anchors) { return n_anchors * (n_anchors - 1) / 2; }

  /// Index of the anchor-pair range (i,j), anchors 1-based, i != j.
  static int pair_index(int i, int j, int n_anchors);

  int size() const { return num_pairs(n_anchors) + n_anchors; }
  double anchor_pair(int i, int j) const { return values[pair_index(i, j, n_anchors)]; }
  double listener(int i) const { return values[num_pairs(n_anchors) + i - 1]; }
};

/// Stacks node coordinates as [x1, y1, ..., xN, yN, xL, yL].
Eigen::VectorXd stack_positions(const std::vector<Vec2>& anchors, const Vec2& listener);

/// g(x): maps stacked positions onto the canonical range vector.
Eigen::VectorXd ranges_from_stacked(const Eigen::VectorXd& x, int n_anchors);

/// Jacobian of ranges_from_stacked, size (num_pairs + N) x 2(N+1). Rows are
/// built from the unit vectors between the involved nodes.
Eigen::MatrixXd range_jacobian(const Eigen::VectorXd& x, int n_anchors);

/// Ranges of a validated geometry. Throws std::invalid_argument on a zero
/// range (coincident nodes) or when the listener position is absent.
RangeVector ranges_from_geometry(const NetworkGeometry& geom);

}  // namespace schedloc
