#include "schedloc/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "schedloc/io.hpp"

namespace schedloc {

namespace {

using nlohmann::json;

const json& require(const json& j, const std::string& key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("config: missing key '" + context + key + "'");
  }
  return *it;
}

double number(const json& j, const std::string& key, const std::string& context) {
  const json& v = require(j, key, context);
  if (!v.is_number()) throw ConfigError("config: '" + context + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return it->get<double>();
}

Vec2 point(const json& v, const std::string& context) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError("config: '" + context + "' must be a [x, y] pair in meters");
  }
  return Vec2(v[0].get<double>(), v[1].get<double>());
}

ClockParams clock_params(const json& j, const std::string& context) {
  ClockParams c;
  c.skew = number_or(j, "skew_ppm", 0.0) * 1e-6;
  c.jitter_var = number_or(j, "jitter_var_ns2", 0.0) * 1e-18;
  c.delay_err_sigma = number_or(j, "delay_err_sigma_ns", 0.0) * 1e-9;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + context + ": " + e.what());
  }
  return c;
}

json clock_json(const ClockParams& c) {
  return json{{"skew_ppm", c.skew * 1e6},
              {"jitter_var_ns2", c.jitter_var * 1e18},
              {"delay_err_sigma_ns", c.delay_err_sigma * 1e9}};
}

}  // namespace

void CalibrationSettings::validate() const {
  if (!(outlier_threshold >= 0.0)) {
    throw ConfigError("config: calibration.outlier_threshold_ns must be >= 0");
  }
}

void EstimationSettings::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("config: estimation.sigma_ns must be > 0");
  if (!(anchor_prior_std > 0.0) || !(listener_prior_std > 0.0)) {
    throw ConfigError("config: prior standard deviations must be > 0");
  }
}

void ExperimentConfig::validate() const {
  try {
    sim.geometry.validate();
    sim.clocks.validate(sim.geometry.num_anchors());
    sim.noise.validate();
    sim.schedule.validate(sim.geometry.num_anchors());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (sim.n_batches < 1) throw ConfigError("config: n_batches >= 1 required");
  calibration.validate();
  estimation.validate();
}

Vec2 ExperimentConfig::listener_prior_center() const {
  if (estimation.listener_prior_mu) return *estimation.listener_prior_mu;
  if (sim.geometry.listener_true) return *sim.geometry.listener_true;
  Vec2 centroid = Vec2::Zero();
  for (const auto& a : sim.geometry.anchors) centroid += a;
  return centroid / static_cast<double>(sim.geometry.num_anchors());
}

Prior ExperimentConfig::make_prior() const {
  return make_gaussian_prior(sim.geometry.anchors, listener_prior_center(),
                             estimation.anchor_prior_std, estimation.listener_prior_std);
}

ExperimentConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  ExperimentConfig cfg;

  const json& geom = require(root, "geometry", "");
  const json& anchors = require(geom, "anchors_m", "geometry.");
  if (!anchors.is_array() || anchors.size() < 1) {
    throw ConfigError("config: 'geometry.anchors_m' must be an array of [x, y] pairs");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    cfg.sim.geometry.anchors.push_back(point(anchors[i], "geometry.anchors_m[" +
                                                             std::to_string(i) + "]"));
  }
  if (geom.contains("listener_true_m")) {
    cfg.sim.geometry.listener_true = point(geom["listener_true_m"], "geometry.listener_true_m");
  }
  const int n = cfg.sim.geometry.num_anchors();

  const json& clocks = require(root, "clocks", "");
  cfg.sim.clocks.listener = clock_params(require(clocks, "listener", "clocks."), "clocks.listener");
  if (clocks.contains("anchors")) {
    const json& arr = clocks["anchors"];
    if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
      throw ConfigError("config: 'clocks.anchors' must list one entry per anchor");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      cfg.sim.clocks.anchors.push_back(
          clock_params(arr[i], "clocks.anchors[" + std::to_string(i) + "]"));
    }
  } else if (clocks.contains("anchors_default")) {
    const ClockParams def = clock_params(clocks["anchors_default"], "clocks.anchors_default");
    cfg.sim.clocks.anchors.assign(static_cast<std::size_t>(n), def);
  } else {
    throw ConfigError("config: 'clocks' needs 'anchors' or 'anchors_default'");
  }

  const json& noise = require(root, "noise", "");
  cfg.sim.noise.channel_var = number(noise, "channel_var_ns2", "noise.") * 1e-18;

  const json& sched = require(root, "schedule", "");
  const json& order = require(sched, "order", "schedule.");
  if (!order.is_array() || order.size() < 2) {
    throw ConfigError("config: 'schedule.order' must list at least two anchor ids");
  }
  for (const auto& v : order) {
    if (!v.is_number_integer()) {
      throw ConfigError("config: 'schedule.order' entries must be integers");
    }
    cfg.sim.schedule.order.push_back(v.get<int>());
  }
  cfg.sim.schedule.nominal_delay = number(sched, "delta_ms", "schedule.") * 1e-3;

  cfg.sim.n_batches = static_cast<int>(number(root, "n_batches", ""));
  cfg.sim.rng_seed = require(root, "rng_seed", "").get<std::uint64_t>();

  if (root.contains("calibration")) {
    const json& cal = root["calibration"];
    if (cal.contains("retrieval")) cfg.calibration.retrieval = cal["retrieval"].get<bool>();
    if (cal.contains("rls")) cfg.calibration.rls = cal["rls"].get<bool>();
    cfg.calibration.outlier_threshold =
        number_or(cal, "outlier_threshold_ns", kDefaultOutlierThreshold * 1e9) * 1e-9;
  }

  if (root.contains("estimation")) {
    const json& est = root["estimation"];
    cfg.estimation.sigma = number_or(est, "sigma_ns", cfg.estimation.sigma * 1e9) * 1e-9;
    if (est.contains("prior")) {
      const json& prior = est["prior"];
      cfg.estimation.anchor_prior_std =
          number_or(prior, "anchor_std_m", cfg.estimation.anchor_prior_std);
      cfg.estimation.listener_prior_std =
          number_or(prior, "listener_std_m", cfg.estimation.listener_prior_std);
      if (prior.contains("listener_mu_m")) {
        cfg.estimation.listener_prior_mu =
            point(prior["listener_mu_m"], "estimation.prior.listener_mu_m");
      }
    }
  }

  if (root.contains("output_dir")) {
    cfg.output_dir = root["output_dir"].get<std::string>();
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

std::string config_to_json(const ExperimentConfig& config) {
  json root;
  json anchors = json::array();
  for (const auto& a : config.sim.geometry.anchors) anchors.push_back({a.x(), a.y()});
  root["geometry"]["anchors_m"] = anchors;
  if (config.sim.geometry.listener_true) {
    root["geometry"]["listener_true_m"] = {config.sim.geometry.listener_true->x(),
                                           config.sim.geometry.listener_true->y()};
  }
  root["clocks"]["listener"] = clock_json(config.sim.clocks.listener);
  json anchor_clocks = json::array();
  for (const auto& c : config.sim.clocks.anchors) anchor_clocks.push_back(clock_json(c));
  root["clocks"]["anchors"] = anchor_clocks;
  root["noise"]["channel_var_ns2"] = config.sim.noise.channel_var * 1e18;
  root["schedule"]["order"] = config.sim.schedule.order;
  root["schedule"]["delta_ms"] = config.sim.schedule.nominal_delay * 1e3;
  root["n_batches"] = config.sim.n_batches;
  root["rng_seed"] = config.sim.rng_seed;
  root["calibration"] = {{"retrieval", config.calibration.retrieval},
                         {"rls", config.calibration.rls},
                         {"outlier_threshold_ns", config.calibration.outlier_threshold * 1e9}};
  json est;
  est["sigma_ns"] = config.estimation.sigma * 1e9;
  est["prior"]["anchor_std_m"] = config.estimation.anchor_prior_std;
  est["prior"]["listener_std_m"] = config.estimation.listener_prior_std;
  if (config.estimation.listener_prior_mu) {
    est["prior"]["listener_mu_m"] = {config.estimation.listener_prior_mu->x(),
                                     config.estimation.listener_prior_mu->y()};
  }
  root["estimation"] = est;
  root["output_dir"] = config.output_dir.string();
  return root.dump(2);
}

}  // namespace schedloc
