#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "pedplan/policy.hpp"
#include "pedplan/scenario.hpp"

namespace pedplan::testing {

// Single-source shortest path over the identical weighted action graph,
// independent of the value-iteration sweep. Edge s -> s+a costs
// length(a) * cell_size * state_cost(s); forbidden transitions match the
// action set's crossed-cell rule.
inline std::vector<double> dijkstra_cost_to_go(const CostGrid& grid, Vec2 goal,
                                               const ActionSet& actions) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  size_t n = grid.cost.size();
  std::vector<double> dist(n, kInf);
  int gx, gy;
  grid.locate(goal, gx, gy);
  int goal_idx = grid.index(gx, gy);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[static_cast<size_t>(goal_idx)] = 0.0;
  queue.push({0.0, goal_idx});
  while (!queue.empty()) {
    auto [d, idx] = queue.top();
    queue.pop();
    if (d > dist[static_cast<size_t>(idx)]) continue;
    int tx = idx % grid.width;
    int ty = idx / grid.width;
    // Relax reversed edges: for each source cell s with action a ending here.
    for (const ActionOffset& a : actions.offsets) {
      int sx = tx - a.dx;
      int sy = ty - a.dy;
      if (!grid.in_bounds(sx, sy)) continue;
      size_t sidx = static_cast<size_t>(grid.index(sx, sy));
      if (!grid.traversable[sidx]) continue;
      bool blocked = false;
      for (const auto& [cx, cy] : a.crossed) {
        int mx = sx + cx, my = sy + cy;
        if (!grid.in_bounds(mx, my) ||
            !grid.traversable[static_cast<size_t>(grid.index(mx, my))]) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      double w = a.length * grid.cell_size * grid.cost[sidx];
      if (d + w < dist[sidx]) {
        dist[sidx] = d + w;
        queue.push({d + w, static_cast<int>(sidx)});
      }
    }
  }
  return dist;
}

// Minimal valid scenario document: one road, two sidewalks, one goal.
inline std::string minimal_scenario_json() {
  return R"({
    "bounds": {"min": [0, 0], "max": [40, 20]},
    "regions": [
      {"id": "road", "kind": "road", "polygon": [[0,8],[40,8],[40,12],[0,12]]},
      {"id": "sw_s", "kind": "sidewalk", "polygon": [[0,4],[40,4],[40,8],[0,8]]},
      {"id": "sw_n", "kind": "sidewalk", "polygon": [[0,12],[40,12],[40,16],[0,16]]}
    ],
    "lanes": [
      {"id": "lane", "centerline": [[0,10],[40,10]], "width": 4.0}
    ],
    "goals": [[35, 6]],
    "ego": {
      "start": {"position": [3, 10], "heading": 0, "speed": 2},
      "goal_region": [[34,8],[39,8],[39,12],[34,12]]
    },
    "obstacles": []
  })";
}

inline CostGrid uniform_grid(int width, int height, double cost,
                             double cell_size = 1.0) {
  CostGrid grid;
  grid.origin = {0.0, 0.0};
  grid.cell_size = cell_size;
  grid.width = width;
  grid.height = height;
  grid.cost.assign(static_cast<size_t>(width) * height, cost);
  grid.traversable.assign(grid.cost.size(), 1);
  return grid;
}

inline std::string fixture_path(const std::string& name) {
#ifdef PEDPLAN_SCENARIO_DIR
  return std::string(PEDPLAN_SCENARIO_DIR) + "/" + name;
#else
  return "scenarios/" + name;
#endif
}

inline std::string config_path(const std::string& name) {
#ifdef PEDPLAN_CONFIG_DIR
  return std::string(PEDPLAN_CONFIG_DIR) + "/" + name;
#else
  return "configs/" + name;
#endif
}

}  // namespace pedplan::testing
