#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "helpers.hpp"
#include "pedplan/simloop.hpp"

using namespace pedplan;
using namespace pedplan::testing;

namespace {

RunConfig quiet_config() {
  RunConfig cfg = load_run_config_file(config_path("default.json"));
  cfg.max_ticks = 100;
  return cfg;
}

// Straight road with no pedestrians at all.
Scenario empty_scenario() {
  Scenario s = load_scenario_file(fixture_path("straight_road.json"));
  s.goals.clear();
  return s;
}

}  // namespace

TEST_CASE("empty world: the ego accelerates toward its desired speed") {
  Scenario s = empty_scenario();
  RunConfig cfg = quiet_config();
  cfg.sampling.desired_speed = 5.0;
  SimCaches caches = build_caches(s, cfg);
  Metrics m = run(s, cfg, caches);
  CHECK(m.collisions == 0);
  CHECK(m.risk_max == 0.0);
  CHECK(m.v_max <= cfg.sampling.limits.v_max + 1e-9);
  // Distance oracle: jerk-limited ramp from 5 m/s start to the desired 5 m/s
  // is simply constant cruising; candidates execute it directly.
  CHECK(m.distance == doctest::Approx(5.0 * m.ticks * cfg.dt).epsilon(0.02));
}

TEST_CASE("ramp-up distance stays within 2% of the closed-form profile") {
  Scenario s = empty_scenario();
  s.ego.start_speed = 4.0;
  RunConfig cfg = quiet_config();
  cfg.sampling.desired_speed = 5.0;
  SimCaches caches = build_caches(s, cfg);
  Metrics m = run(s, cfg, caches);
  REQUIRE(m.ticks == 100);
  // Closed-form comparison profile: a smooth velocity ramp from v0 to v_des
  // over the planner's longest sampling horizon, then cruising. The ramp
  // integral of the zero-end-acceleration profile is v0*T + dv*T/2.
  double v0 = 4.0, v_des = 5.0, total_t = 100 * cfg.dt;
  double ramp_t = 4.0;  // max sampling horizon
  double dist = v0 * ramp_t + 0.5 * (v_des - v0) * ramp_t +
                (total_t - ramp_t) * v_des;
  CHECK(m.distance == doctest::Approx(dist).epsilon(0.02));
}

TEST_CASE("max_ticks zero produces an empty run") {
  Scenario s = empty_scenario();
  RunConfig cfg = quiet_config();
  cfg.max_ticks = 0;
  SimCaches caches = build_caches(s, cfg);
  std::ostringstream trace;
  Metrics m = run(s, cfg, caches,
                  [&](const std::string& line) { trace << line << '\n'; });
  CHECK(m.ticks == 0);
  CHECK(m.distance == 0.0);
  // Header only, no tick records.
  CHECK(trace.str().find("\"tick\"") == std::string::npos);
}

TEST_CASE("ego box overlapping a pedestrian disc terminates the run") {
  Scenario s = load_scenario_file(fixture_path("straight_road.json"));
  RunConfig cfg = quiet_config();
  cfg.profile = PlannerProfile::aggressive;
  SimCaches caches = build_caches(s, cfg);
  WorldState world = initial_world(s, cfg, caches);
  // Plant a pedestrian directly on the bumper, walking into the lane.
  world.pedestrians.clear();
  Pedestrian p;
  p.id = 0;
  p.position = {world.ego.position.x + 2.0, world.ego.position.y};
  p.velocity = {0.0, 0.0};
  p.desired_speed = 0.3;
  p.goal_index = 0;
  world.pedestrians.push_back(p);
  WorldState next = step(world, cfg, caches);
  CHECK(next.collided);
}

TEST_CASE("goal region terminates the run as arrival") {
  Scenario s = empty_scenario();
  RunConfig cfg = quiet_config();
  cfg.max_ticks = 400;
  SimCaches caches = build_caches(s, cfg);
  Metrics m = run(s, cfg, caches);
  CHECK(m.reached_goal);
  CHECK(m.collisions == 0);
}

TEST_CASE("no teleportation: per-tick displacement is bounded") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  SimCaches caches = build_caches(s, cfg);
  WorldState world = initial_world(s, cfg, caches);
  for (int k = 0; k < 40 && !world.collided; ++k) {
    Vec2 before = world.ego.position;
    world = step(world, cfg, caches);
    CHECK((world.ego.position - before).norm() <=
          cfg.sampling.limits.v_max * cfg.dt + 1e-6);
  }
}

TEST_CASE("replanning continuity: candidates start from the executed state") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  SimCaches caches = build_caches(s, cfg);
  WorldState world = initial_world(s, cfg, caches);
  for (int k = 0; k < 30 && !world.collided; ++k) {
    PlanResult result;
    WorldState next = step(world, cfg, caches, &result);
    CHECK((result.trajectory.points.front().position - world.ego.position).norm() <
          1e-6);
    world = next;
  }
}

TEST_CASE("synchronicity: the planner sees post-step pedestrian states") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  SimCaches caches = build_caches(s, cfg);
  WorldState world = initial_world(s, cfg, caches);
  PlanResult result;
  PredictionSet preds;
  WorldState next = step(world, cfg, caches, &result, &preds);
  REQUIRE(preds.agents.size() >= next.pedestrians.size());
  for (size_t i = 0; i < next.pedestrians.size(); ++i) {
    CHECK(preds.agents[i].states.front().mean.x ==
          doctest::Approx(next.pedestrians[i].position.x));
    CHECK(preds.agents[i].states.front().mean.y ==
          doctest::Approx(next.pedestrians[i].position.y));
  }
}

TEST_CASE("trace replays byte-identically") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  cfg.max_ticks = 40;
  SimCaches caches = build_caches(s, cfg);
  auto capture = [&]() {
    std::ostringstream out;
    run(s, cfg, caches, [&](const std::string& line) { out << line << '\n'; });
    return out.str();
  };
  std::string a = capture();
  std::string b = capture();
  CHECK(a == b);
  CHECK(a.find("\"type\":\"header\"") != std::string::npos);
}

TEST_CASE("collision flag mirrors an independent overlap replay") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  cfg.profile = PlannerProfile::aggressive;  // most likely to collide
  bool checked_any = false;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    cfg.seed = seed;
    SimCaches caches = build_caches(s, cfg);
    WorldState world = initial_world(s, cfg, caches);
    for (int k = 0; k < cfg.max_ticks && !world.collided && !world.arrived; ++k) {
      world = step(world, cfg, caches);
      // Independent overlap check against every pedestrian disc.
      bool overlap = false;
      for (const Pedestrian& p : world.pedestrians) {
        Vec2 local = (p.position - world.ego.position).rotated(-world.ego.heading);
        double dx = std::max(std::abs(local.x) - 0.5 * s.ego.length, 0.0);
        double dy = std::max(std::abs(local.y) - 0.5 * s.ego.width, 0.0);
        if (dx * dx + dy * dy <= p.radius * p.radius) overlap = true;
      }
      CHECK(world.collided == overlap);
      checked_any = true;
    }
  }
  CHECK(checked_any);
}

TEST_CASE("batch with one seed reduces to run") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  cfg.max_ticks = 30;
  SimCaches caches = build_caches(s, cfg);
  Metrics single = run(s, cfg, caches);
  auto rows = batch(s, cfg, 1, {cfg.profile}, caches, 1);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].runs == 1);
  CHECK(rows[0].distance_mean == doctest::Approx(single.distance));
  CHECK(rows[0].velocity_mean == doctest::Approx(single.v_mean));
  CHECK(rows[0].risk_mean == doctest::Approx(single.risk_mean));
}

TEST_CASE("batch aggregates are the arithmetic means of per-run metrics") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  RunConfig cfg = quiet_config();
  cfg.max_ticks = 25;
  SimCaches caches = build_caches(s, cfg);
  std::vector<std::vector<Metrics>> per_run;
  auto rows = batch(s, cfg, 6, {PlannerProfile::risk_aware, PlannerProfile::baseline},
                    caches, 2, &per_run);
  REQUIRE(rows.size() == 2);
  REQUIRE(per_run.size() == 2);
  for (size_t pi = 0; pi < rows.size(); ++pi) {
    double dist = 0.0, vel = 0.0, risk = 0.0;
    for (const Metrics& m : per_run[pi]) {
      dist += m.distance;
      vel += m.v_mean;
      risk += m.risk_mean;
    }
    CHECK(rows[pi].distance_mean == doctest::Approx(dist / 6.0).epsilon(1e-12));
    CHECK(rows[pi].velocity_mean == doctest::Approx(vel / 6.0).epsilon(1e-12));
    CHECK(rows[pi].risk_mean == doctest::Approx(risk / 6.0).epsilon(1e-12));
  }
  // Parallel batch equals serial batch.
  auto rows_serial = batch(s, cfg, 6,
                           {PlannerProfile::risk_aware, PlannerProfile::baseline},
                           caches, 1);
  for (size_t pi = 0; pi < rows.size(); ++pi) {
    CHECK(rows[pi].distance_mean == rows_serial[pi].distance_mean);
    CHECK(rows[pi].risk_mean == rows_serial[pi].risk_mean);
    CHECK(rows[pi].velocity_mean == rows_serial[pi].velocity_mean);
  }
}

TEST_CASE("run config validation errors name the field") {
  CHECK_THROWS_WITH_AS(load_run_config("{\"dt\": -1}"),
                       doctest::Contains("dt"), ConfigError);
  CHECK_THROWS_WITH_AS(load_run_config("{\"profile\": \"bogus\"}"),
                       doctest::Contains("profile"), ConfigError);
  CHECK_THROWS_WITH_AS(load_run_config("{\"nonsense\": 1}"),
                       doctest::Contains("nonsense"), ConfigError);
  CHECK_THROWS_WITH_AS(
      load_run_config("{\"policy\": {\"costs\": {\"road\": 5, \"crosswalk\": 20, \"sidewalk\": 10}}}"),
      doctest::Contains("costs"), ConfigError);
  CHECK_THROWS_AS(load_run_config("{ nope"), ConfigError);
}
