#pragma once

// Shared helpers for unit and acceptance tests: random-but-valid scenario
// generators and small independent oracles.

#include <random>
#include <vector>

#include "schedloc/geometry.hpp"
#include "schedloc/schedule.hpp"

namespace schedloc::testing {

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Random transmission order: no immediate repeats, every anchor transmits.
// Retries until the resulting S matrix has a one-dimensional kernel, so the
// result is always a valid schedule.
inline Schedule random_valid_schedule(std::mt19937_64& rng, int n_anchors, int extra_len = 0) {
  const int n_pairs = RangeVector::num_pairs(n_anchors);
  const int length = n_pairs + n_anchors + extra_len;  // minimal M + 1 plus slack
  while (true) {
    Schedule schedule;
    schedule.nominal_delay = 3e-3;
    schedule.order.push_back(uniform_int(rng, 1, n_anchors));
    while (static_cast<int>(schedule.order.size()) < length) {
      int next = uniform_int(rng, 1, n_anchors);
      while (next == schedule.order.back()) next = uniform_int(rng, 1, n_anchors);
      schedule.order.push_back(next);
    }
    bool all_seen = true;
    for (int id = 1; id <= n_anchors; ++id) {
      if (std::find(schedule.order.begin(), schedule.order.end(), id) == schedule.order.end()) {
        all_seen = false;
        break;
      }
    }
    if (!all_seen) continue;
    const Eigen::MatrixXd s = build_s_matrix(schedule, n_anchors);
    if (validate_schedule(s, n_anchors).valid) return schedule;
  }
}

// Random geometry with anchors in a 20 m box, retried until well-posed.
inline NetworkGeometry random_geometry(std::mt19937_64& rng, int n_anchors) {
  while (true) {
    NetworkGeometry geom;
    for (int i = 0; i < n_anchors; ++i) {
      geom.anchors.emplace_back(uniform_real(rng, -10.0, 10.0), uniform_real(rng, -10.0, 10.0));
    }
    geom.listener_true = Vec2(uniform_real(rng, -8.0, 8.0), uniform_real(rng, -8.0, 8.0));
    try {
      geom.validate();
      ranges_from_geometry(geom);  // rejects coincident nodes
      return geom;
    } catch (const std::invalid_argument&) {
    }
  }
}

}  // namespace schedloc::testing
