#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "schedloc/clock.hpp"
#include "schedloc/geometry.hpp"
#include "schedloc/schedule.hpp"

namespace schedloc {

/// One two-way-ranging exchange observed by a third, passive node.
struct TwrObservation {
  double y1 = 0.0;     // RTT at the initiator
  double y2 = 0.0;     // RTT at the responder
  double y3_12 = 0.0;  // listener TDOA, initiator's message then responder's
  double y3_21 = 0.0;  // listener TDOA, responder's message then initiator's
};

struct BatchTruth {
  Eigen::VectorXd theta_true;  // relative skews ϑ_L - ϑ_i, i = 1..N
  Vec2 listener_pos = Vec2::Zero();
};

/// One schedule pass of listener timings plus the delays actually generated
/// by the senders. delta_actual is empty when the delay payload is missing
/// (possible for ingested data, never for simulated batches).
struct MeasurementBatch {
  Eigen::VectorXd y;             // s
  Eigen::VectorXd delta_actual;  // s
  int schedule_id = 0;
  std::optional<BatchTruth> truth;

  bool has_delay_payload() const { return delta_actual.size() == y.size(); }
};

struct NodeClocks {
  ClockParams listener;
  std::vector<ClockParams> anchors;

  void validate(int n_anchors) const;

  /// θ with θ_i = ϑ_L − ϑ_i.
  Eigen::VectorXd relative_skews() const;
};

struct SimConfig {
  NetworkGeometry geometry;
  NodeClocks clocks;
  NoiseParams noise;
  Schedule schedule;
  int n_batches = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Independent, reproducible engine for one batch, derived from
/// (seed, batch_index). Batches can therefore be generated in any order or
/// concurrently without changing the output.
std::mt19937_64 batch_engine(std::uint64_t seed, std::uint64_t batch_index);

/// Simulates one TWR exchange between nodes 1 and 2 at distance rho12,
/// passively observed by node 3 at distances rho13/rho23. Each node's
/// generated delay is δ plus its resolution error; the same realized delay
/// is seen by every receiver of that transmission.
TwrObservation simulate_twr(double rho12, const ClockParams& clock1, const ClockParams& clock2,
                            const ClockParams& clock3, double rho13, double rho23, double delta,
                            const NoiseParams& noise, std::mt19937_64& rng);

/// One scheduled measurement vector:
///   y = (1/c) S ρ + D + (1/c) ϑ_L S ρ + R D + (I + R) ε + η
/// with D = δ·1, R the diagonal of relative skews of the per-measurement
/// delay holders, ε the delay-generation errors and η the AWGN.
MeasurementBatch simulate_batch(const SimConfig& config, const ScheduleMatrices& matrices,
                                std::uint64_t batch_index);

std::vector<MeasurementBatch> simulate_batches(const SimConfig& config,
                                               const ScheduleMatrices& matrices);

}  // namespace schedloc
