#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "pedplan/pedsim.hpp"
#include "pedplan/planner.hpp"
#include "pedplan/scenario.hpp"

namespace pedplan {

struct PredictionConfig {
  double horizon = 4.0;          // s, Gaussian forecast used by the planner
  double sigma0 = 0.05;          // m, initial position stddev per axis
  double q_pos = 0.15;           // m^2/s, pedestrian covariance growth per axis
  double veh_q_long = 0.30;      // m^2/s, vehicle growth along the heading
  double veh_q_lat = 0.05;       // m^2/s, vehicle growth across the heading
  double veh_path_horizon = 2.0; // s, constant-velocity paths fed to pedsim
};

struct PolicyConfig {
  int n_actions = 16;
  double cell_size = 1.0;
  RasterCosts costs;
  double tol = 0.0;  // <= 0 picks the value_iteration default
};

struct RunConfig {
  double dt = 0.1;
  int max_ticks = 100;
  std::uint64_t seed = 1;
  PlannerProfile profile = PlannerProfile::risk_aware;
  RiskThresholds thresholds;
  HarmCoeffs harm;
  double pedestrian_mass = 75.0;
  double ego_inflation = 0.4;  // m, risk-box margin for pedestrian extent
  ForceParams forces;
  SpawnConfig spawn;
  PredictionConfig prediction;
  SamplingConfig sampling;
  PolicyConfig policy;
  bool trace_predictions = false;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses a run configuration document; missing fields keep their defaults,
// unknown fields are rejected. Throws ConfigError naming the field.
RunConfig load_run_config(const std::string& text);
RunConfig load_run_config_file(const std::string& path);

}  // namespace pedplan
