#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "helpers.hpp"
#include "pedplan/policy.hpp"

using namespace pedplan;
using namespace pedplan::testing;

TEST_CASE("action set n=4 is the von Neumann neighborhood") {
  ActionSet set = build_action_set(4);
  REQUIRE(set.offsets.size() == 4);
  std::set<std::pair<int, int>> got;
  for (const auto& a : set.offsets) got.insert({a.dx, a.dy});
  std::set<std::pair<int, int>> want{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  CHECK(got == want);
}

TEST_CASE("action set n=8 adds the diagonals") {
  ActionSet set = build_action_set(8);
  REQUIRE(set.offsets.size() == 8);
  std::set<std::pair<int, int>> got;
  for (const auto& a : set.offsets) got.insert({a.dx, a.dy});
  std::set<std::pair<int, int>> want;
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      if (dx || dy) want.insert({dx, dy});
    }
  }
  CHECK(got == want);
}

TEST_CASE("action set n=16 keeps only unique angles") {
  // Oracle: enumerate offsets by radius, drop duplicate angles, take 16.
  ActionSet set = build_action_set(16);
  REQUIRE(set.offsets.size() == 16);
  std::set<std::pair<int, int>> got;
  std::set<double> angles;
  for (const auto& a : set.offsets) {
    got.insert({a.dx, a.dy});
    angles.insert(a.angle);
    CHECK(std::abs(a.dx) <= 2);
    CHECK(std::abs(a.dy) <= 2);
    CHECK(std::gcd(std::abs(a.dx), std::abs(a.dy)) == 1);  // shortest per angle
  }
  CHECK(angles.size() == 16);
  // The knight-like ring must be present.
  CHECK(got.count({2, 1}) == 1);
  CHECK(got.count({-1, 2}) == 1);
  CHECK(got.count({1, -2}) == 1);
  // (2, 2) duplicates the angle of (1, 1) and must not appear.
  CHECK(got.count({2, 2}) == 0);
}

TEST_CASE("value iteration on a goal-only grid") {
  CostGrid grid = uniform_grid(1, 1, 10.0);
  ActionSet actions = build_action_set(4);
  PolicyField field = value_iteration(grid, {0.5, 0.5}, actions);
  CHECK(field.cost_to_go[0] == 0.0);
  CHECK(field.converged);
}

TEST_CASE("corridor cost-to-go is 10 per meter") {
  CostGrid grid = uniform_grid(12, 1, 10.0);
  ActionSet actions = build_action_set(4);
  // Goal in the rightmost cell.
  PolicyField field = value_iteration(grid, {11.5, 0.5}, actions, 1e-9, 500);
  for (int k = 0; k < 12; ++k) {
    double expected = 10.0 * (11 - k);
    CHECK(field.cost_to_go[static_cast<size_t>(k)] == doctest::Approx(expected));
  }
  Vec2 dir = desired_direction(field, actions, {6.5, 0.5});  // 5 cells left of goal
  CHECK(dir.x == doctest::Approx(1.0));
  CHECK(dir.y == doctest::Approx(0.0));
}

TEST_CASE("non-traversable goal cell is an error") {
  CostGrid grid = uniform_grid(4, 4, 10.0);
  grid.traversable[static_cast<size_t>(grid.index(2, 2))] = 0;
  ActionSet actions = build_action_set(4);
  CHECK_THROWS_AS(value_iteration(grid, {2.5, 2.5}, actions), PolicyError);
}

TEST_CASE("unreachable cells carry infinite cost, not an error") {
  CostGrid grid = uniform_grid(5, 1, 10.0);
  grid.traversable[2] = 0;  // wall splits the corridor
  ActionSet actions = build_action_set(4);
  PolicyField field = value_iteration(grid, {4.5, 0.5}, actions);
  CHECK(std::isinf(field.cost_to_go[0]));
  CHECK(std::isinf(field.cost_to_go[1]));
  CHECK(field.cost_to_go[3] == doctest::Approx(10.0));
}

namespace {

CostGrid random_grid(std::mt19937_64& rng, int max_side = 100) {
  std::uniform_int_distribution<int> side(3, max_side);
  std::uniform_real_distribution<double> cost(1.0, 60.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CostGrid grid = uniform_grid(side(rng), side(rng), 10.0);
  for (size_t i = 0; i < grid.cost.size(); ++i) {
    grid.cost[i] = cost(rng);
    grid.traversable[i] = unit(rng) < 0.85 ? 1 : 0;
  }
  return grid;
}

Vec2 random_goal(std::mt19937_64& rng, const CostGrid& grid) {
  std::uniform_int_distribution<int> gx(0, grid.width - 1);
  std::uniform_int_distribution<int> gy(0, grid.height - 1);
  while (true) {
    int x = gx(rng), y = gy(rng);
    if (grid.traversable[static_cast<size_t>(grid.index(x, y))]) {
      return grid.cell_center(x, y);
    }
  }
}

}  // namespace

TEST_CASE("value iteration matches the Dijkstra oracle on random grids") {
  std::mt19937_64 rng(1234);
  ActionSet actions = build_action_set(16);
  for (int trial = 0; trial < 10; ++trial) {
    CostGrid grid = random_grid(rng, 40);
    Vec2 goal = random_goal(rng, grid);
    PolicyField field = value_iteration(grid, goal, actions, 1e-9, 4000);
    std::vector<double> oracle = dijkstra_cost_to_go(grid, goal, actions);
    for (size_t i = 0; i < oracle.size(); ++i) {
      if (std::isinf(oracle[i])) {
        CHECK(std::isinf(field.cost_to_go[i]));
      } else {
        CHECK(field.cost_to_go[i] ==
              doctest::Approx(oracle[i]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("greedy descent reaches the goal with strictly decreasing cost") {
  std::mt19937_64 rng(77);
  ActionSet actions = build_action_set(16);
  CostGrid grid = random_grid(rng, 30);
  Vec2 goal = random_goal(rng, grid);
  PolicyField field = value_iteration(grid, goal, actions, 1e-9, 4000);
  int gx, gy;
  grid.locate(goal, gx, gy);
  int max_steps = grid.width * grid.height;
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      size_t idx = static_cast<size_t>(grid.index(ix, iy));
      if (!std::isfinite(field.cost_to_go[idx])) continue;
      int cx = ix, cy = iy, steps = 0;
      double value = field.cost_to_go[idx];
      while (!(cx == gx && cy == gy)) {
        std::int16_t a = field.best_action[static_cast<size_t>(grid.index(cx, cy))];
        REQUIRE(a >= 0);
        cx += actions.offsets[static_cast<size_t>(a)].dx;
        cy += actions.offsets[static_cast<size_t>(a)].dy;
        double next = field.cost_to_go[static_cast<size_t>(grid.index(cx, cy))];
        CHECK(next < value);
        value = next;
        REQUIRE(++steps <= max_steps);
      }
    }
  }
}

namespace {

// Crosswalk world: road band with a crosswalk column, sidewalks top/bottom.
CostGrid crosswalk_grid(double road_cost) {
  CostGrid grid = uniform_grid(21, 11, 10.0);
  for (int iy = 4; iy <= 6; ++iy) {
    for (int ix = 0; ix < 21; ++ix) {
      grid.cost[static_cast<size_t>(grid.index(ix, iy))] =
          (ix == 14) ? 20.0 : road_cost;
    }
  }
  return grid;
}

int crosswalk_cells_on_greedy_path(const CostGrid& grid, const PolicyField& field,
                                   const ActionSet& actions, int sx, int sy) {
  int cx = sx, cy = sy, count = 0;
  int gx, gy;
  grid.locate(field.goal, gx, gy);
  while (!(cx == gx && cy == gy)) {
    if (grid.cost[static_cast<size_t>(grid.index(cx, cy))] == 20.0) count += 1;
    std::int16_t a = field.best_action[static_cast<size_t>(field.index(cx, cy))];
    if (a < 0) break;
    cx += actions.offsets[static_cast<size_t>(a)].dx;
    cy += actions.offsets[static_cast<size_t>(a)].dy;
  }
  return count;
}

}  // namespace

TEST_CASE("desired direction points into the crosswalk when it is cheaper") {
  ActionSet actions = build_action_set(16);
  CostGrid grid = crosswalk_grid(50.0);
  // Goal on the far (top) sidewalk behind the crosswalk column.
  PolicyField field = value_iteration(grid, {14.5, 8.5}, actions, 1e-9, 2000);
  // Standing on the road cell adjacent to the crosswalk column: detouring
  // through the crosswalk is cheaper than walking straight up the road.
  Vec2 dir = desired_direction(field, actions, {13.5, 5.5});
  CHECK(dir.x > 0.0);
  // Dijkstra confirms the crosswalk path is cheaper than cutting straight.
  auto oracle = dijkstra_cost_to_go(grid, {14.5, 8.5}, actions);
  CHECK(oracle[static_cast<size_t>(grid.index(13, 5))] ==
        doctest::Approx(field.cost_to_go[static_cast<size_t>(grid.index(13, 5))])
            .epsilon(1e-9));
}

TEST_CASE("raising the road cost never reduces crosswalk usage") {
  ActionSet actions = build_action_set(16);
  int prev = -1;
  for (double road_cost : {30.0, 50.0, 100.0, 200.0}) {
    CostGrid grid = crosswalk_grid(road_cost);
    PolicyField field = value_iteration(grid, {14.5, 9.5}, actions, 1e-9, 2000);
    int count = crosswalk_cells_on_greedy_path(grid, field, actions, 2, 1);
    if (prev >= 0) CHECK(count >= prev);
    prev = count;
  }
}

TEST_CASE("desired direction at the goal cell") {
  CostGrid grid = uniform_grid(5, 5, 10.0);
  ActionSet actions = build_action_set(8);
  Vec2 goal{2.5, 2.5};
  PolicyField field = value_iteration(grid, goal, actions);
  Vec2 at_goal = desired_direction(field, actions, goal);
  CHECK(at_goal.norm() == 0.0);  // coincident
  Vec2 near_goal = desired_direction(field, actions, {2.2, 2.5});
  CHECK(near_goal.x == doctest::Approx(1.0));
  CHECK_THROWS_AS(desired_direction(field, actions, {99.0, 0.0}), PolicyError);
}

TEST_CASE("desired direction escapes non-traversable cells") {
  CostGrid grid = uniform_grid(5, 1, 10.0);
  grid.traversable[0] = 0;
  ActionSet actions = build_action_set(4);
  PolicyField field = value_iteration(grid, {4.5, 0.5}, actions);
  Vec2 dir = desired_direction(field, actions, {0.5, 0.5});
  CHECK(dir.x == doctest::Approx(1.0));  // toward the nearest finite cell
}

TEST_CASE("convergence on bundled fixtures within the default budget") {
  Scenario s = load_scenario_file(fixture_path("dense.json"));
  CostGrid grid = rasterize(s, 1.0, RasterCosts{});
  ActionSet actions = build_action_set(16);
  for (const Vec2& goal : s.goals) {
    PolicyField field = value_iteration(grid, goal, actions, 1e-6);
    CHECK(field.converged);
    CHECK(field.iterations < 10 * (grid.width + grid.height));
  }
}

TEST_CASE("policy cache round-trips") {
  CostGrid grid = uniform_grid(8, 6, 10.0);
  ActionSet actions = build_action_set(8);
  PolicyField field = value_iteration(grid, {6.5, 3.5}, actions);
  auto dir = std::filesystem::temp_directory_path() / "pedplan_policy_test";
  std::filesystem::create_directories(dir);
  std::string path =
      (dir / policy_cache_name(field.grid_hash, field.goal, 8, field.tol)).string();
  save_policy(field, path);
  PolicyField loaded;
  REQUIRE(load_policy(path, loaded));
  CHECK(loaded.grid_hash == field.grid_hash);
  CHECK(loaded.cost_to_go == field.cost_to_go);
  CHECK(loaded.best_action == field.best_action);
  std::filesystem::remove_all(dir);
}
