#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "schedloc/calibrate.hpp"
#include "schedloc/estimate.hpp"
#include "schedloc/simulate.hpp"

namespace schedloc {

struct CalibrationSettings {
  bool retrieval = true;
  bool rls = true;
  double outlier_threshold = kDefaultOutlierThreshold;  // s

  void validate() const;
};

struct EstimationSettings {
  double sigma = 3e-9;               // s, measurement noise std for V and the bound
  double anchor_prior_std = 0.01;    // m
  double listener_prior_std = 10.0;  // m
  std::optional<Vec2> listener_prior_mu;  // default: listener_true, else anchor centroid

  void validate() const;
};

/// Full experiment description: scenario, mitigation switches, estimator
/// settings and output location. Parsed from JSON; every time-valued key
/// carries its unit in its name (ns, ns2, ms) and is converted to seconds
/// here.
struct ExperimentConfig {
  SimConfig sim;
  CalibrationSettings calibration;
  EstimationSettings estimation;
  std::filesystem::path output_dir = "out";

  /// Piecewise validation with specific messages. Does not require
  /// listener_true (unknown when ingesting captured data); simulation
  /// additionally calls sim.validate().
  void validate() const;

  Vec2 listener_prior_center() const;
  Prior make_prior() const;
};

/// Parses the JSON config text. Throws ConfigError with the offending key.
ExperimentConfig parse_config_json(const std::string& text);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Serializes a config back to JSON (unit-suffixed keys, round-trip safe).
std::string config_to_json(const ExperimentConfig& config);

}  // namespace schedloc
