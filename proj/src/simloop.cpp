#include "pedplan/simloop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pedplan/rng.hpp"

namespace pedplan {

using nlohmann::ordered_json;

namespace {

ReferenceLine build_ego_route(const Scenario& scenario) {
  // Stitch the starting lane with its successor chain.
  int start = -1;
  if (!scenario.ego.lane.empty()) {
    for (size_t i = 0; i < scenario.lanes.size(); ++i) {
      if (scenario.lanes[i].id == scenario.ego.lane) start = static_cast<int>(i);
    }
  }
  if (start < 0) {
    start = match_lane(scenario.ego.start_position, scenario.ego.start_heading,
                       scenario.lanes);
  }
  if (start < 0) {
    Vec2 dir{std::cos(scenario.ego.start_heading), std::sin(scenario.ego.start_heading)};
    return ReferenceLine({scenario.ego.start_position - dir * 5.0,
                          scenario.ego.start_position + dir * 300.0});
  }
  std::vector<Vec2> route;
  int lane = start;
  for (int hops = 0; hops < 8 && lane >= 0; ++hops) {
    const Lane& l = scenario.lanes[static_cast<size_t>(lane)];
    for (const Vec2& p : l.centerline) {
      if (route.empty() || (route.back() - p).norm() > 1e-9) route.push_back(p);
    }
    int next = -1;
    if (!l.successors.empty()) {
      for (size_t i = 0; i < scenario.lanes.size(); ++i) {
        if (scenario.lanes[i].id == l.successors.front()) next = static_cast<int>(i);
      }
    }
    lane = next;
  }
  return ReferenceLine(std::move(route));
}

}  // namespace

SimCaches build_caches(const Scenario& scenario, const RunConfig& cfg,
                       const std::string& cache_dir) {
  SimCaches caches;
  caches.scenario = &scenario;
  caches.grid = rasterize(scenario, cfg.policy.cell_size, cfg.policy.costs);
  caches.actions = build_action_set(cfg.policy.n_actions);
  std::uint64_t hash = grid_hash(caches.grid);
  double tol = cfg.policy.tol;
  for (const Vec2& goal : scenario.goals) {
    PolicyField field;
    bool loaded = false;
    std::string path;
    if (!cache_dir.empty()) {
      path = (std::filesystem::path(cache_dir) /
              policy_cache_name(hash, goal, cfg.policy.n_actions, tol))
                 .string();
      if (load_policy(path, field) && field.grid_hash == hash) loaded = true;
    }
    if (!loaded) {
      field = value_iteration(caches.grid, goal, caches.actions, tol);
      if (!path.empty()) {
        std::filesystem::create_directories(cache_dir);
        save_policy(field, path);
      }
    }
    caches.fields.push_back(std::move(field));
  }
  caches.ego_reference = build_ego_route(scenario);
  return caches;
}

WorldState initial_world(const Scenario& scenario, const RunConfig& cfg,
                         const SimCaches& caches) {
  WorldState world;
  world.ego.position = scenario.ego.start_position;
  world.ego.heading = scenario.ego.start_heading;
  world.ego.speed = scenario.ego.start_speed;
  world.ego.acceleration = 0.0;
  ReferenceLine::Projection proj = caches.ego_reference.project(world.ego.position);
  world.ego.frenet.s = proj.s;
  world.ego.frenet.d = proj.d;
  world.ego.frenet.s_dot = world.ego.speed;

  SpawnConfig spawn_cfg = cfg.spawn;
  spawn_cfg.seed = mix_seed(cfg.spawn.seed, cfg.seed);
  world.pedestrians = spawn_pedestrians(scenario, spawn_cfg);
  for (Pedestrian& p : world.pedestrians) {
    p.step_width = cfg.dt * p.desired_speed;
  }
  for (const ObstacleInit& init : scenario.obstacles) {
    Obstacle o;
    o.id = init.id;
    o.position = init.position;
    o.heading = init.heading;
    o.speed = init.speed;
    o.mass = init.mass;
    o.half_length = 0.5 * init.length;
    o.half_width = 0.5 * init.width;
    o.lane = match_lane(init.position, init.heading, scenario.lanes);
    if (o.lane >= 0) {
      o.lane_arc = closest_point_on_polyline(
                       init.position,
                       scenario.lanes[static_cast<size_t>(o.lane)].centerline)
                       .arc;
    }
    world.obstacles.push_back(o);
  }
  return world;
}

namespace {

void advance_obstacle(Obstacle& o, const Scenario& scenario, double dt) {
  if (o.speed <= 0.0) return;
  if (o.lane >= 0) {
    const Lane& lane = scenario.lanes[static_cast<size_t>(o.lane)];
    double total = polyline_length(lane.centerline);
    o.lane_arc += o.speed * dt;
    if (o.lane_arc >= total && !lane.successors.empty()) {
      for (size_t i = 0; i < scenario.lanes.size(); ++i) {
        if (scenario.lanes[i].id == lane.successors.front()) {
          o.lane = static_cast<int>(i);
          o.lane_arc -= total;
          break;
        }
      }
    }
    const Lane& cur = scenario.lanes[static_cast<size_t>(o.lane)];
    double arc = std::min(o.lane_arc, polyline_length(cur.centerline));
    double acc = 0.0;
    for (size_t i = 0; i + 1 < cur.centerline.size(); ++i) {
      Vec2 a = cur.centerline[i], b = cur.centerline[i + 1];
      double seg = (b - a).norm();
      if (acc + seg >= arc - 1e-12 || i + 2 == cur.centerline.size()) {
        double t = seg > 1e-12 ? std::clamp((arc - acc) / seg, 0.0, 1.0) : 0.0;
        o.position = a + (b - a) * t;
        Vec2 tang = (b - a).normalized();
        if (tang.norm() > 0.5) o.heading = std::atan2(tang.y, tang.x);
        break;
      }
      acc += seg;
    }
  } else {
    o.position += Vec2{std::cos(o.heading), std::sin(o.heading)} * (o.speed * dt);
  }
}

PredictionSet build_predictions(const WorldState& world, const RunConfig& cfg) {
  PredictionSet preds;
  preds.dt = cfg.dt;
  Sym2 sigma0 = Sym2::diag(cfg.prediction.sigma0 * cfg.prediction.sigma0,
                           cfg.prediction.sigma0 * cfg.prediction.sigma0);
  Sym2 q = Sym2::diag(cfg.prediction.q_pos, cfg.prediction.q_pos);
  for (const Pedestrian& p : world.pedestrians) {
    AgentPrediction agent;
    agent.id = p.id;
    agent.kind = AgentKind::pedestrian;
    agent.mass = cfg.pedestrian_mass;
    agent.velocity = p.arrived ? Vec2{} : p.velocity;
    Pedestrian frozen = p;
    if (p.arrived) frozen.velocity = {};
    agent.states = predict_pedestrian(frozen, cfg.prediction.horizon, cfg.dt, q, sigma0);
    preds.agents.push_back(std::move(agent));
  }
  for (const Obstacle& o : world.obstacles) {
    AgentPrediction agent;
    agent.id = 1000000u + o.id;  // distinct id space from pedestrians
    agent.kind = AgentKind::vehicle;
    agent.mass = o.mass;
    agent.velocity = Vec2{std::cos(o.heading), std::sin(o.heading)} * o.speed;
    agent.states = predict_vehicle_gaussian(o.position, o.heading, o.speed,
                                            cfg.prediction.horizon, cfg.dt,
                                            cfg.prediction.veh_q_long,
                                            cfg.prediction.veh_q_lat);
    preds.agents.push_back(std::move(agent));
  }
  return preds;
}

}  // namespace

WorldState step(const WorldState& world, const RunConfig& cfg,
                const SimCaches& caches, PlanResult* plan_out,
                PredictionSet* preds_out) {
  const Scenario& scenario = *caches.scenario;
  WorldState next = world;
  next.tick = world.tick + 1;
  next.time = next.tick * cfg.dt;

  for (Obstacle& o : next.obstacles) advance_obstacle(o, scenario, cfg.dt);

  // Vehicle footprints (ego + obstacles) repel pedestrians along their
  // constant-velocity predicted paths.
  std::vector<VehicleFootprint> footprints;
  {
    VehicleFootprint ego_fp;
    ego_fp.position = world.ego.position;
    ego_fp.heading = world.ego.heading;
    ego_fp.speed = world.ego.speed;
    // The path polyline runs from the body center forward; the radius covers
    // whatever the polyline itself does not reach (the full hull when parked,
    // the lateral half-body when moving).
    double ego_reach = world.ego.speed * cfg.prediction.veh_path_horizon;
    ego_fp.body_radius =
        std::max(0.5 * scenario.ego.width,
                 std::hypot(std::max(0.5 * scenario.ego.length - ego_reach, 0.0),
                            0.5 * scenario.ego.width)) +
        0.4;
    ego_fp.predicted_paths =
        predict_vehicle_paths(world.ego.position, world.ego.heading,
                              world.ego.speed, scenario.lanes,
                              cfg.prediction.veh_path_horizon);
    footprints.push_back(std::move(ego_fp));
    for (const Obstacle& o : next.obstacles) {
      VehicleFootprint fp;
      fp.position = o.position;
      fp.heading = o.heading;
      fp.speed = o.speed;
      double reach = o.speed * cfg.prediction.veh_path_horizon;
      fp.body_radius =
          std::max(o.half_width,
                   std::hypot(std::max(o.half_length - reach, 0.0), o.half_width)) +
          0.4;
      fp.predicted_paths = predict_vehicle_paths(
          o.position, o.heading, o.speed, scenario.lanes,
          cfg.prediction.veh_path_horizon);
      footprints.push_back(std::move(fp));
    }
  }

  next.pedestrians = step_pedestrians(world.pedestrians, footprints,
                                      caches.fields, caches.actions,
                                      cfg.forces, cfg.dt);

  PredictionSet preds = build_predictions(next, cfg);

  PlanEnv env;
  env.reference = &caches.ego_reference;
  env.goal_region = &scenario.ego.goal_region;
  env.ego_box = EgoBoxDims{0.5 * scenario.ego.length, 0.5 * scenario.ego.width,
                           cfg.ego_inflation};
  env.ego_mass = scenario.ego.mass;
  PlanResult result = plan(next.ego, env, preds, cfg.sampling, cfg.thresholds,
                           cfg.harm, cfg.profile);

  // Perfect tracking: the ego takes the first step of the selected trajectory.
  const TrajPoint& tracked =
      result.trajectory.points.size() > 1 ? result.trajectory.points[1]
                                          : result.trajectory.points[0];
  next.ego.position = tracked.position;
  next.ego.heading = tracked.heading;
  next.ego.speed = std::abs(tracked.v);
  next.ego.acceleration = tracked.a;
  next.ego.frenet = tracked.frenet;

  // Simulation-level collision check with exact footprints.
  double hl = 0.5 * scenario.ego.length;
  double hw = 0.5 * scenario.ego.width;
  for (const Pedestrian& p : next.pedestrians) {
    if (obb_disc_overlap(next.ego.position, next.ego.heading, hl, hw, p.position,
                         p.radius)) {
      next.collided = true;
      break;
    }
  }
  if (!next.collided) {
    for (const Obstacle& o : next.obstacles) {
      if (obb_obb_overlap(next.ego.position, next.ego.heading, hl, hw, o.position,
                          o.heading, o.half_length, o.half_width)) {
        next.collided = true;
        break;
      }
    }
  }
  if (!scenario.ego.goal_region.empty() &&
      point_in_polygon(next.ego.position, scenario.ego.goal_region)) {
    next.arrived = true;
  }

  if (plan_out) *plan_out = std::move(result);
  if (preds_out) *preds_out = std::move(preds);
  return next;
}

namespace {

ordered_json trace_header(const Scenario& scenario, const RunConfig& cfg) {
  ordered_json h;
  h["type"] = "header";
  h["profile"] = profile_name(cfg.profile);
  h["dt"] = cfg.dt;
  h["seed"] = cfg.seed;
  h["scenario"] = ordered_json::parse(serialize_scenario(scenario));
  return h;
}

ordered_json trace_tick(const WorldState& world, const PlanResult& plan_result,
                        const PredictionSet& preds, bool with_preds) {
  ordered_json rec;
  rec["type"] = "tick";
  rec["tick"] = world.tick;
  rec["t"] = world.time;
  rec["ego"] = {{"x", world.ego.position.x},
                {"y", world.ego.position.y},
                {"heading", world.ego.heading},
                {"v", world.ego.speed},
                {"a", world.ego.acceleration}};
  rec["sel"] = {{"J", plan_result.trajectory.base_cost},
                {"rstar", plan_result.risk.r_star},
                {"hstar", plan_result.risk.h_star},
                {"valid", plan_result.risk.valid},
                {"fallback", plan_result.fallback}};
  rec["cand"] = {{"total", plan_result.stats.total},
                 {"feasible", plan_result.stats.feasible},
                 {"valid", plan_result.stats.valid},
                 {"selected", plan_result.stats.selected}};
  {
    // Per-(step, obstacle) risk rows of the selected trajectory, worst first,
    // capped to keep the trace bounded.
    std::vector<RiskRow> rows = plan_result.risk.rows;
    std::sort(rows.begin(), rows.end(), [](const RiskRow& a, const RiskRow& b) {
      if (a.r != b.r) return a.r > b.r;
      if (a.obstacle_id != b.obstacle_id) return a.obstacle_id < b.obstacle_id;
      return a.step < b.step;
    });
    if (rows.size() > 50) rows.resize(50);
    ordered_json jr = ordered_json::array();
    for (const RiskRow& row : rows) {
      if (row.p <= 1e-6) continue;
      jr.push_back({row.step * preds.dt, row.obstacle_id, row.p, row.h, row.r});
    }
    rec["risk"] = std::move(jr);
  }
  rec["collided"] = world.collided;
  rec["arrived"] = world.arrived;
  ordered_json peds = ordered_json::array();
  for (const Pedestrian& p : world.pedestrians) {
    peds.push_back({p.id, p.position.x, p.position.y, p.velocity.x, p.velocity.y,
                    p.arrived ? 1 : 0});
  }
  rec["peds"] = std::move(peds);
  ordered_json obs = ordered_json::array();
  for (const Obstacle& o : world.obstacles) {
    obs.push_back({o.id, o.position.x, o.position.y, o.heading, o.speed,
                   o.half_length, o.half_width});
  }
  rec["obstacles"] = std::move(obs);
  if (with_preds) {
    ordered_json jp = ordered_json::array();
    for (const AgentPrediction& agent : preds.agents) {
      ordered_json states = ordered_json::array();
      size_t stride = 5;  // every 0.5 s at the default dt
      for (size_t k = 0; k < agent.states.size(); k += stride) {
        const GaussianState& g = agent.states[k];
        states.push_back({g.t, g.mean.x, g.mean.y, g.cov.xx, g.cov.yy, g.cov.xy});
      }
      jp.push_back({{"id", agent.id},
                    {"kind", agent.kind == AgentKind::pedestrian ? "ped" : "veh"},
                    {"states", std::move(states)}});
    }
    rec["preds"] = std::move(jp);
  }
  return rec;
}

}  // namespace

Metrics run(const Scenario& scenario, const RunConfig& cfg,
            const SimCaches& caches, const TraceSink& sink) {
  WorldState world = initial_world(scenario, cfg, caches);
  Metrics m;
  m.v_min = std::numeric_limits<double>::infinity();
  m.risk_min = std::numeric_limits<double>::infinity();
  double v_sum = 0.0, risk_sum = 0.0;

  if (sink) sink(trace_header(scenario, cfg).dump());

  for (int tick = 0; tick < cfg.max_ticks; ++tick) {
    PlanResult plan_result;
    PredictionSet preds;
    Vec2 before = world.ego.position;
    world = step(world, cfg, caches, &plan_result, &preds);
    m.ticks += 1;
    m.distance += (world.ego.position - before).norm();
    double v = world.ego.speed;
    v_sum += v;
    m.v_min = std::min(m.v_min, v);
    m.v_max = std::max(m.v_max, v);
    double r = plan_result.risk.r_star;
    risk_sum += r;
    m.risk_min = std::min(m.risk_min, r);
    m.risk_max = std::max(m.risk_max, r);
    if (v < 0.1) m.freeze_time += cfg.dt;
    if (sink) sink(trace_tick(world, plan_result, preds, cfg.trace_predictions).dump());
    if (world.collided) {
      m.collisions += 1;
      break;
    }
    if (world.arrived) {
      m.reached_goal = true;
      break;
    }
  }
  if (m.ticks > 0) {
    m.v_mean = v_sum / m.ticks;
    m.risk_mean = risk_sum / m.ticks;
  } else {
    m.v_min = m.v_max = 0.0;
    m.risk_min = m.risk_max = 0.0;
  }
  return m;
}

std::vector<BatchRow> batch(const Scenario& scenario, const RunConfig& cfg,
                            int n_seeds, const std::vector<PlannerProfile>& profiles,
                            const SimCaches& caches, int jobs,
                            std::vector<std::vector<Metrics>>* per_run) {
  struct Job {
    size_t profile_idx;
    int seed_offset;
  };
  std::vector<Job> jobs_list;
  for (size_t pi = 0; pi < profiles.size(); ++pi) {
    for (int k = 0; k < n_seeds; ++k) jobs_list.push_back({pi, k});
  }
  std::vector<std::vector<Metrics>> results(profiles.size(),
                                            std::vector<Metrics>(static_cast<size_t>(n_seeds)));
  std::atomic<size_t> cursor{0};
  int workers = std::max(1, jobs);
  auto worker = [&]() {
    while (true) {
      size_t i = cursor.fetch_add(1);
      if (i >= jobs_list.size()) break;
      const Job& job = jobs_list[i];
      RunConfig rc = cfg;
      rc.profile = profiles[job.profile_idx];
      rc.seed = cfg.seed + static_cast<std::uint64_t>(job.seed_offset);
      results[job.profile_idx][static_cast<size_t>(job.seed_offset)] =
          run(scenario, rc, caches);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<BatchRow> rows;
  for (size_t pi = 0; pi < profiles.size(); ++pi) {
    BatchRow row;
    row.profile = profiles[pi];
    row.runs = n_seeds;
    row.distance_min = std::numeric_limits<double>::infinity();
    row.risk_min = std::numeric_limits<double>::infinity();
    row.velocity_min = std::numeric_limits<double>::infinity();
    for (const Metrics& m : results[pi]) {
      row.collisions += m.collisions;
      row.distance_mean += m.distance;
      row.distance_min = std::min(row.distance_min, m.distance);
      row.distance_max = std::max(row.distance_max, m.distance);
      row.risk_mean += m.risk_mean;
      row.risk_min = std::min(row.risk_min, m.risk_min);
      row.risk_max = std::max(row.risk_max, m.risk_max);
      row.velocity_mean += m.v_mean;
      row.velocity_min = std::min(row.velocity_min, m.v_mean);
      row.velocity_max = std::max(row.velocity_max, m.v_mean);
      row.freeze_mean += m.freeze_time;
    }
    if (n_seeds > 0) {
      row.distance_mean /= n_seeds;
      row.risk_mean /= n_seeds;
      row.velocity_mean /= n_seeds;
      row.freeze_mean /= n_seeds;
    }
    rows.push_back(row);
  }
  if (per_run) *per_run = std::move(results);
  return rows;
}

std::string metrics_csv(const std::vector<BatchRow>& rows) {
  std::ostringstream out;
  out << "profile,runs,collisions,distance_mean,distance_min,distance_max,"
         "risk_mean,risk_min,risk_max,velocity_mean,velocity_min,velocity_max,"
         "freeze_mean\n";
  char buf[512];
  for (const BatchRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  profile_name(r.profile), r.runs, r.collisions, r.distance_mean,
                  r.distance_min, r.distance_max, r.risk_mean, r.risk_min,
                  r.risk_max, r.velocity_mean, r.velocity_min, r.velocity_max,
                  r.freeze_mean);
    out << buf;
  }
  return out.str();
}

}  // namespace pedplan
