#include "pedplan/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pedplan {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      throw ConfigError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

double num(const json& j, const char* key, double fallback,
           const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

}  // namespace

RunConfig load_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("top level must be an object");
  check_keys(doc, "config",
             {"dt", "max_ticks", "seed", "profile", "thresholds", "harm",
              "pedestrian_mass", "ego_inflation", "forces", "spawn",
              "prediction", "sampling", "policy", "trace_predictions"});

  RunConfig cfg;
  cfg.dt = num(doc, "dt", cfg.dt, "config");
  if (cfg.dt <= 0.0) throw ConfigError("dt must be positive");
  cfg.max_ticks = static_cast<int>(num(doc, "max_ticks", cfg.max_ticks, "config"));
  if (cfg.max_ticks < 0) throw ConfigError("max_ticks must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(num(doc, "seed", 1.0, "config"));
  if (doc.contains("profile")) {
    if (!doc["profile"].is_string()) throw ConfigError("profile: expected a string");
    auto p = parse_profile(doc["profile"].get<std::string>());
    if (!p) {
      throw ConfigError("profile: expected risk_aware | aggressive | baseline, got '" +
                        doc["profile"].get<std::string>() + "'");
    }
    cfg.profile = *p;
  }
  if (doc.contains("trace_predictions")) {
    if (!doc["trace_predictions"].is_boolean()) {
      throw ConfigError("trace_predictions: expected a boolean");
    }
    cfg.trace_predictions = doc["trace_predictions"].get<bool>();
  }

  if (doc.contains("thresholds")) {
    const json& j = doc["thresholds"];
    check_keys(j, "thresholds", {"h_max", "r_max", "p_gate"});
    cfg.thresholds.h_max = num(j, "h_max", cfg.thresholds.h_max, "thresholds");
    cfg.thresholds.r_max = num(j, "r_max", cfg.thresholds.r_max, "thresholds");
    cfg.thresholds.p_gate = num(j, "p_gate", cfg.thresholds.p_gate, "thresholds");
    if (cfg.thresholds.h_max <= 0.0 || cfg.thresholds.h_max > 1.0) {
      throw ConfigError("thresholds.h_max must lie in (0, 1]");
    }
    if (cfg.thresholds.r_max <= 0.0) throw ConfigError("thresholds.r_max must be positive");
  }
  if (doc.contains("harm")) {
    const json& j = doc["harm"];
    check_keys(j, "harm", {"c0", "c1", "c_area"});
    cfg.harm.c0 = num(j, "c0", cfg.harm.c0, "harm");
    cfg.harm.c1 = num(j, "c1", cfg.harm.c1, "harm");
    cfg.harm.c_area = num(j, "c_area", cfg.harm.c_area, "harm");
    if (cfg.harm.c1 < 0.0) throw ConfigError("harm.c1 must be >= 0");
  }
  cfg.pedestrian_mass = num(doc, "pedestrian_mass", cfg.pedestrian_mass, "config");
  if (cfg.pedestrian_mass <= 0.0) throw ConfigError("pedestrian_mass must be positive");
  cfg.ego_inflation = num(doc, "ego_inflation", cfg.ego_inflation, "config");
  if (cfg.ego_inflation < 0.0) throw ConfigError("ego_inflation must be >= 0");

  if (doc.contains("forces")) {
    const json& j = doc["forces"];
    check_keys(j, "forces",
               {"tau", "ped_amplitude", "ped_range", "veh_amplitude", "veh_range",
                "fov_half_angle_deg", "fov_scale", "max_speed_factor", "fd_step"});
    ForceParams& f = cfg.forces;
    f.tau = num(j, "tau", f.tau, "forces");
    f.ped_amplitude = num(j, "ped_amplitude", f.ped_amplitude, "forces");
    f.ped_range = num(j, "ped_range", f.ped_range, "forces");
    f.veh_amplitude = num(j, "veh_amplitude", f.veh_amplitude, "forces");
    f.veh_range = num(j, "veh_range", f.veh_range, "forces");
    f.fov_half_angle =
        num(j, "fov_half_angle_deg", f.fov_half_angle * 180.0 / kPi, "forces") * kPi / 180.0;
    f.fov_scale = num(j, "fov_scale", f.fov_scale, "forces");
    f.max_speed_factor = num(j, "max_speed_factor", f.max_speed_factor, "forces");
    f.fd_step = num(j, "fd_step", f.fd_step, "forces");
    if (f.tau <= 0.0 || f.ped_range <= 0.0 || f.veh_range <= 0.0) {
      throw ConfigError("forces: tau and ranges must be positive");
    }
    if (f.fov_half_angle <= 0.0 || f.fov_half_angle > kPi) {
      throw ConfigError("forces.fov_half_angle_deg must lie in (0, 180]");
    }
    if (f.fov_scale <= 0.0 || f.fov_scale > 1.0) {
      throw ConfigError("forces.fov_scale must lie in (0, 1]");
    }
  }

  if (doc.contains("spawn")) {
    const json& j = doc["spawn"];
    check_keys(j, "spawn",
               {"mean_cluster_spacing", "mean_cluster_size", "position_stddev",
                "desired_speed_mean", "desired_speed_stddev", "seed"});
    SpawnConfig& s = cfg.spawn;
    s.mean_cluster_spacing = num(j, "mean_cluster_spacing", s.mean_cluster_spacing, "spawn");
    s.mean_cluster_size = num(j, "mean_cluster_size", s.mean_cluster_size, "spawn");
    s.position_stddev = num(j, "position_stddev", s.position_stddev, "spawn");
    s.desired_speed_mean = num(j, "desired_speed_mean", s.desired_speed_mean, "spawn");
    s.desired_speed_stddev = num(j, "desired_speed_stddev", s.desired_speed_stddev, "spawn");
    s.seed = static_cast<std::uint64_t>(num(j, "seed", 1.0, "spawn"));
    if (s.mean_cluster_spacing <= 0.0 || s.mean_cluster_size <= 0.0 ||
        s.position_stddev <= 0.0 || s.desired_speed_mean <= 0.0 ||
        s.desired_speed_stddev <= 0.0) {
      throw ConfigError("spawn: all parameters must be positive");
    }
  }

  if (doc.contains("prediction")) {
    const json& j = doc["prediction"];
    check_keys(j, "prediction",
               {"horizon", "sigma0", "q_pos", "veh_q_long", "veh_q_lat",
                "veh_path_horizon"});
    PredictionConfig& p = cfg.prediction;
    p.horizon = num(j, "horizon", p.horizon, "prediction");
    p.sigma0 = num(j, "sigma0", p.sigma0, "prediction");
    p.q_pos = num(j, "q_pos", p.q_pos, "prediction");
    p.veh_q_long = num(j, "veh_q_long", p.veh_q_long, "prediction");
    p.veh_q_lat = num(j, "veh_q_lat", p.veh_q_lat, "prediction");
    p.veh_path_horizon = num(j, "veh_path_horizon", p.veh_path_horizon, "prediction");
    if (p.horizon <= 0.0 || p.veh_path_horizon <= 0.0) {
      throw ConfigError("prediction: horizons must be positive");
    }
    if (p.sigma0 < 0.0 || p.q_pos < 0.0 || p.veh_q_long < 0.0 || p.veh_q_lat < 0.0) {
      throw ConfigError("prediction: noise terms must be >= 0");
    }
  }

  if (doc.contains("sampling")) {
    const json& j = doc["sampling"];
    check_keys(j, "sampling",
               {"d_end", "v_end_factors", "horizons", "desired_speed", "v_max",
                "a_max", "a_min", "kappa_max", "weights"});
    SamplingConfig& s = cfg.sampling;
    auto grid = [&](const char* key, std::vector<double>& out) {
      if (!j.contains(key)) return;
      if (!j[key].is_array() || j[key].empty()) {
        throw ConfigError(std::string("sampling.") + key + ": expected a non-empty array");
      }
      out.clear();
      for (const auto& v : j[key]) out.push_back(v.get<double>());
    };
    grid("d_end", s.d_end);
    grid("v_end_factors", s.v_end_factors);
    grid("horizons", s.horizons);
    s.desired_speed = num(j, "desired_speed", s.desired_speed, "sampling");
    s.limits.v_max = num(j, "v_max", s.limits.v_max, "sampling");
    s.limits.a_max = num(j, "a_max", s.limits.a_max, "sampling");
    s.limits.a_min = num(j, "a_min", s.limits.a_min, "sampling");
    s.limits.kappa_max = num(j, "kappa_max", s.limits.kappa_max, "sampling");
    if (s.limits.v_max <= 0.0 || s.limits.a_max <= 0.0 || s.limits.kappa_max <= 0.0) {
      throw ConfigError("sampling: limits must be positive");
    }
    if (s.limits.a_min >= 0.0) throw ConfigError("sampling.a_min must be negative");
    for (double T : s.horizons) {
      if (T <= 0.0) throw ConfigError("sampling.horizons must be positive");
    }
    if (doc["sampling"].contains("weights")) {
      const json& w = doc["sampling"]["weights"];
      check_keys(w, "sampling.weights",
                 {"jerk", "velocity", "lateral", "terminal", "probability"});
      s.weights.jerk = num(w, "jerk", s.weights.jerk, "weights");
      s.weights.velocity = num(w, "velocity", s.weights.velocity, "weights");
      s.weights.lateral = num(w, "lateral", s.weights.lateral, "weights");
      s.weights.terminal = num(w, "terminal", s.weights.terminal, "weights");
      s.weights.probability = num(w, "probability", s.weights.probability, "weights");
    }
  }
  cfg.sampling.dt = cfg.dt;

  if (doc.contains("policy")) {
    const json& j = doc["policy"];
    check_keys(j, "policy", {"n_actions", "cell_size", "costs", "tol"});
    cfg.policy.n_actions = static_cast<int>(num(j, "n_actions", cfg.policy.n_actions, "policy"));
    cfg.policy.cell_size = num(j, "cell_size", cfg.policy.cell_size, "policy");
    cfg.policy.tol = num(j, "tol", cfg.policy.tol, "policy");
    if (cfg.policy.n_actions < 4) throw ConfigError("policy.n_actions must be >= 4");
    if (cfg.policy.cell_size <= 0.0) throw ConfigError("policy.cell_size must be positive");
    if (j.contains("costs")) {
      const json& c = j["costs"];
      check_keys(c, "policy.costs", {"road", "crosswalk", "sidewalk"});
      cfg.policy.costs.road = num(c, "road", cfg.policy.costs.road, "policy.costs");
      cfg.policy.costs.crosswalk = num(c, "crosswalk", cfg.policy.costs.crosswalk, "policy.costs");
      cfg.policy.costs.sidewalk = num(c, "sidewalk", cfg.policy.costs.sidewalk, "policy.costs");
      if (!(cfg.policy.costs.road > cfg.policy.costs.crosswalk &&
            cfg.policy.costs.crosswalk > cfg.policy.costs.sidewalk &&
            cfg.policy.costs.sidewalk > 0.0)) {
        throw ConfigError("policy.costs must satisfy road > crosswalk > sidewalk > 0");
      }
    }
  }
  return cfg;
}

RunConfig load_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_run_config(ss.str());
}

}  // namespace pedplan
