#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pedplan/config.hpp"
#include "pedplan/pedsim.hpp"
#include "pedplan/planner.hpp"
#include "pedplan/policy.hpp"
#include "pedplan/prediction.hpp"
#include "pedplan/scenario.hpp"

namespace pedplan {

struct Obstacle {
  std::uint32_t id = 0;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double mass = 1500.0;
  double half_length = 2.25;
  double half_width = 0.9;
  int lane = -1;          // matched lane index, -1 when unmatched
  double lane_arc = 0.0;  // arc position along the matched lane
};

struct WorldState {
  int tick = 0;
  double time = 0.0;
  EgoState ego;
  std::vector<Pedestrian> pedestrians;
  std::vector<Obstacle> obstacles;
  bool arrived = false;
  bool collided = false;
};

struct Metrics {
  double distance = 0.0;
  double v_mean = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  double risk_mean = 0.0;
  double risk_min = 0.0;
  double risk_max = 0.0;
  int collisions = 0;
  double freeze_time = 0.0;  // cumulative seconds with v < 0.1 m/s
  int ticks = 0;
  bool reached_goal = false;
};

// Immutable per-scenario state shared by every run.
struct SimCaches {
  const Scenario* scenario = nullptr;
  CostGrid grid;
  ActionSet actions;
  std::vector<PolicyField> fields;  // one per pedestrian goal
  ReferenceLine ego_reference;
};

// Rasterizes, builds (or loads) the per-goal policies, and stitches the ego
// reference route. cache_dir may be empty to skip the on-disk cache.
SimCaches build_caches(const Scenario& scenario, const RunConfig& cfg,
                       const std::string& cache_dir = "");

WorldState initial_world(const Scenario& scenario, const RunConfig& cfg,
                         const SimCaches& caches);

// One synchronous tick: obstacles advance, vehicle paths are predicted,
// pedestrians step, predictions are built, the planner runs, the ego tracks
// the selected trajectory, and collisions are checked.
WorldState step(const WorldState& world, const RunConfig& cfg,
                const SimCaches& caches, PlanResult* plan_out = nullptr,
                PredictionSet* preds_out = nullptr);

using TraceSink = std::function<void(const std::string& line)>;

// Runs until the goal region is reached, a collision occurs, or max_ticks
// pass. The sink, when set, receives one JSON line per tick plus a header.
Metrics run(const Scenario& scenario, const RunConfig& cfg,
            const SimCaches& caches, const TraceSink& sink = {});

struct BatchRow {
  PlannerProfile profile;
  int runs = 0;
  int collisions = 0;
  // Aggregates over per-run metrics.
  double distance_mean = 0.0, distance_min = 0.0, distance_max = 0.0;
  double risk_mean = 0.0, risk_min = 0.0, risk_max = 0.0;
  double velocity_mean = 0.0, velocity_min = 0.0, velocity_max = 0.0;
  double freeze_mean = 0.0;
};

// n_seeds independent runs per profile (seeds cfg.seed .. cfg.seed+n-1),
// fanned out over `jobs` worker threads.
std::vector<BatchRow> batch(const Scenario& scenario, const RunConfig& cfg,
                            int n_seeds, const std::vector<PlannerProfile>& profiles,
                            const SimCaches& caches, int jobs = 1,
                            std::vector<std::vector<Metrics>>* per_run = nullptr);

std::string metrics_csv(const std::vector<BatchRow>& rows);

}  // namespace pedplan
