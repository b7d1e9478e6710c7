#include "schedloc/simulate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace schedloc {

void ClockParams::validate() const {
  if (!(jitter_var >= 0.0)) throw std::invalid_argument("clock: jitter_var must be >= 0");
  if (!(delay_err_sigma >= 0.0)) {
    throw std::invalid_argument("clock: delay_err_sigma must be >= 0");
  }
  if (!(std::abs(skew) < 1e-2)) {
    throw std::invalid_argument("clock: |skew| must be < 1e-2");
  }
}

void NoiseParams::validate() const {
  if (!(channel_var >= 0.0)) throw std::invalid_argument("noise: channel_var must be >= 0");
}

void NodeClocks::validate(int n_anchors) const {
  listener.validate();
  if (static_cast<int>(anchors.size()) != n_anchors) {
    throw std::invalid_argument("clocks: expected " + std::to_string(n_anchors) +
                                " anchor clock entries, got " + std::to_string(anchors.size()));
  }
  for (const auto& c : anchors) c.validate();
}

Eigen::VectorXd NodeClocks::relative_skews() const {
  Eigen::VectorXd theta(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    theta[static_cast<int>(i)] = listener.skew - anchors[i].skew;
  }
  return theta;
}

void SimConfig::validate() const {
  geometry.validate();
  if (!geometry.listener_true) {
    throw std::invalid_argument("sim: listener_true required for simulation");
  }
  clocks.validate(geometry.num_anchors());
  noise.validate();
  schedule.validate(geometry.num_anchors());
  if (n_batches < 1) throw std::invalid_argument("sim: n_batches >= 1 required");
}

std::mt19937_64 batch_engine(std::uint64_t seed, std::uint64_t batch_index) {
  // splitmix64 over (seed, batch_index) decorrelates the per-batch streams.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return std::mt19937_64(mix(mix(seed) + batch_index));
}

namespace {

// sigma * z with z ~ N(0,1); keeps the consumed stream identical when a
// sigma is zero.
double draw_scaled_normal(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> standard(0.0, 1.0);
  return sigma * standard(rng);
}

}  // namespace

TwrObservation simulate_twr(double rho12, const ClockParams& clock1, const ClockParams& clock2,
                            const ClockParams& clock3, double rho13, double rho23, double delta,
                            const NoiseParams& noise, std::mt19937_64& rng) {
  if (!(rho12 > 0.0 && rho13 > 0.0 && rho23 > 0.0)) {
    throw std::invalid_argument("twr: ranges must be positive");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("twr: delta must be positive");
  const double c = kSpeedOfLight;

  // One realized delay per transmission; every receiver sees the same value.
  const double delta1 = delta + draw_scaled_normal(rng, clock1.delay_err_sigma);
  const double delta2 = delta + draw_scaled_normal(rng, clock2.delay_err_sigma);

  const double sd1 = std::sqrt(measurement_variance(clock1, noise));
  const double sd2 = std::sqrt(measurement_variance(clock2, noise));
  const double sd3 = std::sqrt(measurement_variance(clock3, noise));

  TwrObservation obs;
  obs.y1 = 2.0 * (rho12 / c) * (1.0 + clock1.skew) +
           delta2 * (1.0 + clock1.skew - clock2.skew) + draw_scaled_normal(rng, sd1);
  obs.y2 = 2.0 * (rho12 / c) * (1.0 + clock2.skew) +
           delta1 * (1.0 + clock2.skew - clock1.skew) + draw_scaled_normal(rng, sd2);
  obs.y3_12 = (rho12 + rho23 - rho13) / c * (1.0 + clock3.skew) +
              delta2 * (1.0 + clock3.skew - clock2.skew) + draw_scaled_normal(rng, sd3);
  obs.y3_21 = (rho12 + rho13 - rho23) / c * (1.0 + clock3.skew) +
              delta1 * (1.0 + clock3.skew - clock1.skew) + draw_scaled_normal(rng, sd3);
  return obs;
}

MeasurementBatch simulate_batch(const SimConfig& config, const ScheduleMatrices& matrices,
                                std::uint64_t batch_index) {
  const int n = config.geometry.num_anchors();
  if (matrices.n_anchors != n || matrices.num_measurements() != config.schedule.num_measurements()) {
    throw std::invalid_argument("sim: config and schedule matrices are inconsistent");
  }

  const RangeVector rho = ranges_from_geometry(config.geometry);
  const Eigen::VectorXd srho = matrices.s * rho.values;
  const Eigen::VectorXd theta = config.clocks.relative_skews();
  const double listener_skew = config.clocks.listener.skew;
  const double noise_sd =
      std::sqrt(measurement_variance(config.clocks.listener, config.noise));
  const int m = matrices.num_measurements();

  std::mt19937_64 rng = batch_engine(config.rng_seed, batch_index);

  // Fixed draw order per batch: the M delay errors, then the M jitters.
  Eigen::VectorXd delta_actual(m);
  for (int k = 0; k < m; ++k) {
    const int holder = config.schedule.order[static_cast<std::size_t>(k) + 1];
    const double err_sigma =
        config.clocks.anchors[static_cast<std::size_t>(holder - 1)].delay_err_sigma;
    delta_actual[k] = config.schedule.nominal_delay + draw_scaled_normal(rng, err_sigma);
  }
  Eigen::VectorXd eta(m);
  for (int k = 0; k < m; ++k) eta[k] = draw_scaled_normal(rng, noise_sd);

  MeasurementBatch batch;
  batch.y.resize(m);
  for (int k = 0; k < m; ++k) {
    const int holder = config.schedule.order[static_cast<std::size_t>(k) + 1];
    const double rel_skew = theta[holder - 1];
    batch.y[k] = (srho[k] / kSpeedOfLight) * (1.0 + listener_skew) +
                 delta_actual[k] * (1.0 + rel_skew) + eta[k];
  }
  batch.delta_actual = std::move(delta_actual);
  batch.truth = BatchTruth{theta, *config.geometry.listener_true};
  return batch;
}

std::vector<MeasurementBatch> simulate_batches(const SimConfig& config,
                                               const ScheduleMatrices& matrices) {
  config.validate();
  std::vector<MeasurementBatch> batches;
  batches.reserve(static_cast<std::size_t>(config.n_batches));
  for (int b = 0; b < config.n_batches; ++b) {
    batches.push_back(simulate_batch(config, matrices, static_cast<std::uint64_t>(b)));
  }
  return batches;
}

}  // namespace schedloc
