#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedplan/geometry.hpp"
#include "pedplan/pedestrian.hpp"

namespace pedplan {

enum class RegionKind { road, sidewalk, crosswalk, goal };

const char* region_kind_name(RegionKind kind);

struct Region {
  RegionKind kind = RegionKind::road;
  Polygon polygon;  // simple, CCW, >= 3 vertices
  std::string id;
};

struct Lane {
  std::string id;
  std::vector<Vec2> centerline;  // >= 2 points
  double width = 3.5;
  std::vector<std::string> successors;
};

struct EgoTask {
  Vec2 start_position;
  double start_heading = 0.0;
  double start_speed = 0.0;
  Polygon goal_region;
  double length = 4.5;
  double width = 1.8;
  double mass = 1500.0;
  std::string lane;  // optional hint naming the starting lane
};

struct ObstacleInit {
  std::uint32_t id = 0;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double mass = 1500.0;
  double length = 4.5;
  double width = 1.8;
  std::string lane;
};

struct Scenario {
  std::vector<Region> regions;
  std::vector<Lane> lanes;
  std::vector<Vec2> goals;  // pedestrian goal points, each inside a sidewalk
  EgoTask ego;
  std::vector<ObstacleInit> obstacles;
  Aabb bounds;
};

struct SpawnConfig {
  double mean_cluster_spacing = 8.0;  // m, exponential gap between clusters
  double mean_cluster_size = 2.0;     // geometric, support starts at 1
  double position_stddev = 0.8;       // m, normal scatter around the anchor
  double desired_speed_mean = 1.4;    // m/s
  double desired_speed_stddev = 0.3;  // m/s
  std::uint64_t seed = 1;
};

struct RasterCosts {
  double road = 50.0;
  double crosswalk = 20.0;
  double sidewalk = 10.0;
};

struct CostGrid {
  Vec2 origin;
  double cell_size = 1.0;
  int width = 0;
  int height = 0;
  std::vector<double> cost;         // row-major, height rows of width
  std::vector<std::uint8_t> traversable;

  int index(int ix, int iy) const { return iy * width + ix; }
  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }
  Vec2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
  }
  // Cell containing p; no bounds check.
  void locate(Vec2 p, int& ix, int& iy) const {
    ix = static_cast<int>(std::floor((p.x - origin.x) / cell_size));
    iy = static_cast<int>(std::floor((p.y - origin.y) / cell_size));
  }
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses and validates a scenario document (schema in the README).
// Throws ScenarioError naming the offending field or invariant.
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);

// Cell-center rasterization with priority crosswalk > sidewalk > road.
CostGrid rasterize(const Scenario& scenario, double cell_size,
                   const RasterCosts& costs);

std::uint64_t grid_hash(const CostGrid& grid);

struct SpawnStats {
  int clusters = 0;
  int attempted = 0;
  int discarded = 0;  // members falling outside their sidewalk
};

// Cluster anchors sit along each sidewalk's approximate centerline with
// exponential spacing; members scatter normally and are dropped when they
// land outside the sidewalk. Deterministic for a fixed config.
std::vector<Pedestrian> spawn_pedestrians(const Scenario& scenario,
                                          const SpawnConfig& cfg,
                                          SpawnStats* stats = nullptr);

// Principal-axis centerline of a polygon, clipped to its interior.
std::vector<Vec2> polygon_centerline(const Polygon& poly);

}  // namespace pedplan
