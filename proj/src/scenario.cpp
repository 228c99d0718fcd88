#include "pedplan/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pedplan/rng.hpp"

namespace pedplan {

using nlohmann::json;
using nlohmann::ordered_json;

const char* region_kind_name(RegionKind kind) {
  switch (kind) {
    case RegionKind::road: return "road";
    case RegionKind::sidewalk: return "sidewalk";
    case RegionKind::crosswalk: return "crosswalk";
    case RegionKind::goal: return "goal";
  }
  return "?";
}

namespace {

RegionKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "road") return RegionKind::road;
  if (s == "sidewalk") return RegionKind::sidewalk;
  if (s == "crosswalk") return RegionKind::crosswalk;
  if (s == "goal") return RegionKind::goal;
  throw ScenarioError(where + ": unknown region kind '" + s + "'");
}

Vec2 parse_vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ScenarioError(where + ": expected [x, y]");
  }
  Vec2 v{j[0].get<double>(), j[1].get<double>()};
  if (!v.finite()) throw ScenarioError(where + ": non-finite coordinate");
  return v;
}

Polygon parse_polygon(const json& j, const std::string& where) {
  if (!j.is_array()) throw ScenarioError(where + ": expected a vertex list");
  Polygon poly;
  for (size_t i = 0; i < j.size(); ++i) {
    poly.push_back(parse_vec(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return poly;
}

void validate_polygon(const Polygon& poly, const std::string& where) {
  if (poly.size() < 3) throw ScenarioError(where + ": polygon needs >= 3 vertices");
  if (!polygon_is_simple(poly)) throw ScenarioError(where + ": polygon not simple");
  if (!polygon_is_ccw(poly)) throw ScenarioError(where + ": polygon not CCW");
}

double get_number(const json& j, const char* key, const std::string& where,
                  double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) throw ScenarioError(where + ": missing field '" + key + "'");
    return fallback;
  }
  if (!j[key].is_number()) throw ScenarioError(where + ": '" + key + "' must be a number");
  return j[key].get<double>();
}

}  // namespace

Scenario load_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("top level must be an object");
  for (const char* key : {"regions", "goals", "ego", "bounds"}) {
    if (!doc.contains(key)) throw ScenarioError(std::string("missing field '") + key + "'");
  }

  Scenario s;

  const json& jb = doc["bounds"];
  if (!jb.contains("min") || !jb.contains("max")) {
    throw ScenarioError("bounds: expected 'min' and 'max'");
  }
  s.bounds.min = parse_vec(jb["min"], "bounds.min");
  s.bounds.max = parse_vec(jb["max"], "bounds.max");
  if (s.bounds.width() <= 0.0 || s.bounds.height() <= 0.0) {
    throw ScenarioError("bounds: empty extent");
  }

  for (size_t i = 0; i < doc["regions"].size(); ++i) {
    const json& jr = doc["regions"][i];
    std::string where = "regions[" + std::to_string(i) + "]";
    Region r;
    r.id = jr.value("id", "region_" + std::to_string(i));
    if (!jr.contains("kind") || !jr["kind"].is_string()) {
      throw ScenarioError(where + ": missing 'kind'");
    }
    r.kind = parse_kind(jr["kind"].get<std::string>(), where);
    if (!jr.contains("polygon")) throw ScenarioError(where + ": missing 'polygon'");
    r.polygon = parse_polygon(jr["polygon"], where + ".polygon");
    validate_polygon(r.polygon, where + " (" + r.id + ")");
    s.regions.push_back(std::move(r));
  }

  if (doc.contains("lanes")) {
    for (size_t i = 0; i < doc["lanes"].size(); ++i) {
      const json& jl = doc["lanes"][i];
      std::string where = "lanes[" + std::to_string(i) + "]";
      Lane lane;
      lane.id = jl.value("id", "lane_" + std::to_string(i));
      if (!jl.contains("centerline")) throw ScenarioError(where + ": missing 'centerline'");
      for (size_t k = 0; k < jl["centerline"].size(); ++k) {
        lane.centerline.push_back(
            parse_vec(jl["centerline"][k], where + ".centerline[" + std::to_string(k) + "]"));
      }
      if (lane.centerline.size() < 2) {
        throw ScenarioError(where + ": lane polyline needs >= 2 points");
      }
      lane.width = get_number(jl, "width", where, 3.5);
      if (lane.width <= 0.0) throw ScenarioError(where + ": width must be positive");
      if (jl.contains("successors")) {
        for (const auto& js : jl["successors"]) {
          lane.successors.push_back(js.get<std::string>());
        }
      }
      s.lanes.push_back(std::move(lane));
    }
  }
  for (const Lane& lane : s.lanes) {
    for (const std::string& succ : lane.successors) {
      bool found = std::any_of(s.lanes.begin(), s.lanes.end(),
                               [&](const Lane& l) { return l.id == succ; });
      if (!found) {
        throw ScenarioError("lane '" + lane.id + "': unknown successor '" + succ + "'");
      }
    }
  }

  for (size_t i = 0; i < doc["goals"].size(); ++i) {
    s.goals.push_back(parse_vec(doc["goals"][i], "goals[" + std::to_string(i) + "]"));
  }

  const json& je = doc["ego"];
  if (!je.contains("start")) throw ScenarioError("ego: missing 'start'");
  const json& js = je["start"];
  if (!js.contains("position")) throw ScenarioError("ego.start: missing 'position'");
  s.ego.start_position = parse_vec(js["position"], "ego.start.position");
  s.ego.start_heading = get_number(js, "heading", "ego.start", 0.0);
  s.ego.start_speed = get_number(js, "speed", "ego.start", 0.0);
  if (s.ego.start_speed < 0.0) throw ScenarioError("ego.start: speed must be >= 0");
  if (!je.contains("goal_region")) throw ScenarioError("ego: missing 'goal_region'");
  s.ego.goal_region = parse_polygon(je["goal_region"], "ego.goal_region");
  validate_polygon(s.ego.goal_region, "ego.goal_region");
  s.ego.length = get_number(je, "length", "ego", 4.5);
  s.ego.width = get_number(je, "width", "ego", 1.8);
  s.ego.mass = get_number(je, "mass", "ego", 1500.0);
  s.ego.lane = je.value("lane", "");

  if (doc.contains("obstacles")) {
    for (size_t i = 0; i < doc["obstacles"].size(); ++i) {
      const json& jo = doc["obstacles"][i];
      std::string where = "obstacles[" + std::to_string(i) + "]";
      ObstacleInit o;
      o.id = static_cast<std::uint32_t>(get_number(jo, "id", where, static_cast<double>(i)));
      if (!jo.contains("position")) throw ScenarioError(where + ": missing 'position'");
      o.position = parse_vec(jo["position"], where + ".position");
      o.heading = get_number(jo, "heading", where, 0.0);
      o.speed = get_number(jo, "speed", where, 0.0);
      o.mass = get_number(jo, "mass", where, 1500.0);
      o.length = get_number(jo, "length", where, 4.5);
      o.width = get_number(jo, "width", where, 1.8);
      o.lane = jo.value("lane", "");
      if (o.mass <= 0.0) throw ScenarioError(where + ": mass must be positive");
      s.obstacles.push_back(std::move(o));
    }
  }

  // Cross-field invariants.
  if (!s.bounds.contains(s.ego.start_position)) {
    throw ScenarioError("ego.start.position outside bounds");
  }
  for (size_t i = 0; i < s.goals.size(); ++i) {
    bool inside = false;
    for (const Region& r : s.regions) {
      if (r.kind == RegionKind::sidewalk && point_in_polygon(s.goals[i], r.polygon)) {
        inside = true;
        break;
      }
    }
    if (!inside) {
      throw ScenarioError("goals[" + std::to_string(i) + "] not inside any sidewalk");
    }
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  ordered_json doc;
  doc["bounds"] = {{"min", {s.bounds.min.x, s.bounds.min.y}},
                   {"max", {s.bounds.max.x, s.bounds.max.y}}};
  doc["regions"] = ordered_json::array();
  for (const Region& r : s.regions) {
    ordered_json jr;
    jr["id"] = r.id;
    jr["kind"] = region_kind_name(r.kind);
    ordered_json poly = ordered_json::array();
    for (const Vec2& v : r.polygon) poly.push_back({v.x, v.y});
    jr["polygon"] = std::move(poly);
    doc["regions"].push_back(std::move(jr));
  }
  doc["lanes"] = ordered_json::array();
  for (const Lane& l : s.lanes) {
    ordered_json jl;
    jl["id"] = l.id;
    ordered_json line = ordered_json::array();
    for (const Vec2& v : l.centerline) line.push_back({v.x, v.y});
    jl["centerline"] = std::move(line);
    jl["width"] = l.width;
    jl["successors"] = l.successors;
    doc["lanes"].push_back(std::move(jl));
  }
  doc["goals"] = ordered_json::array();
  for (const Vec2& g : s.goals) doc["goals"].push_back({g.x, g.y});
  ordered_json je;
  je["start"] = {{"position", {s.ego.start_position.x, s.ego.start_position.y}},
                 {"heading", s.ego.start_heading},
                 {"speed", s.ego.start_speed}};
  ordered_json goal_poly = ordered_json::array();
  for (const Vec2& v : s.ego.goal_region) goal_poly.push_back({v.x, v.y});
  je["goal_region"] = std::move(goal_poly);
  je["length"] = s.ego.length;
  je["width"] = s.ego.width;
  je["mass"] = s.ego.mass;
  if (!s.ego.lane.empty()) je["lane"] = s.ego.lane;
  doc["ego"] = std::move(je);
  doc["obstacles"] = ordered_json::array();
  for (const ObstacleInit& o : s.obstacles) {
    ordered_json jo;
    jo["id"] = o.id;
    jo["position"] = {o.position.x, o.position.y};
    jo["heading"] = o.heading;
    jo["speed"] = o.speed;
    jo["mass"] = o.mass;
    jo["length"] = o.length;
    jo["width"] = o.width;
    if (!o.lane.empty()) jo["lane"] = o.lane;
    doc["obstacles"].push_back(std::move(jo));
  }
  return doc.dump(2);
}

CostGrid rasterize(const Scenario& scenario, double cell_size,
                   const RasterCosts& costs) {
  if (cell_size <= 0.0) throw ScenarioError("rasterize: cell_size must be positive");
  if (!(costs.road > costs.crosswalk && costs.crosswalk > costs.sidewalk &&
        costs.sidewalk > 0.0)) {
    throw ScenarioError("rasterize: costs must satisfy road > crosswalk > sidewalk > 0");
  }
  if (scenario.bounds.area() <= 0.0) throw ScenarioError("rasterize: zero-area bounds");

  CostGrid grid;
  grid.origin = scenario.bounds.min;
  grid.cell_size = cell_size;
  grid.width = std::max(1, static_cast<int>(
      std::ceil(scenario.bounds.width() / cell_size - 1e-9)));
  grid.height = std::max(1, static_cast<int>(
      std::ceil(scenario.bounds.height() / cell_size - 1e-9)));
  grid.cost.assign(static_cast<size_t>(grid.width) * grid.height, 0.0);
  grid.traversable.assign(grid.cost.size(), 0);

  // Precompute per-region bounding boxes to skip distant cells.
  std::vector<Aabb> boxes;
  boxes.reserve(scenario.regions.size());
  for (const Region& r : scenario.regions) boxes.push_back(polygon_aabb(r.polygon));

  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      Vec2 c = grid.cell_center(ix, iy);
      int priority = -1;  // crosswalk 2 > sidewalk 1 > road 0
      double cost = 0.0;
      for (size_t k = 0; k < scenario.regions.size(); ++k) {
        const Region& r = scenario.regions[k];
        int pr;
        double rc;
        switch (r.kind) {
          case RegionKind::crosswalk: pr = 2; rc = costs.crosswalk; break;
          case RegionKind::sidewalk: pr = 1; rc = costs.sidewalk; break;
          case RegionKind::road: pr = 0; rc = costs.road; break;
          default: continue;  // goal regions carry no walking cost
        }
        if (pr <= priority) continue;
        if (!boxes[k].contains(c)) continue;
        if (point_in_polygon(c, r.polygon)) {
          priority = pr;
          cost = rc;
        }
      }
      size_t idx = static_cast<size_t>(grid.index(ix, iy));
      if (priority >= 0) {
        grid.cost[idx] = cost;
        grid.traversable[idx] = 1;
      }
    }
  }
  return grid;
}

std::uint64_t grid_hash(const CostGrid& grid) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&grid.origin, sizeof(grid.origin));
  mix(&grid.cell_size, sizeof(grid.cell_size));
  mix(&grid.width, sizeof(grid.width));
  mix(&grid.height, sizeof(grid.height));
  mix(grid.cost.data(), grid.cost.size() * sizeof(double));
  mix(grid.traversable.data(), grid.traversable.size());
  return h;
}

std::vector<Vec2> polygon_centerline(const Polygon& poly) {
  // Principal axis of boundary samples through the centroid, clipped to the
  // polygon. A crude medial-axis stand-in that is exact for rectangles.
  std::vector<Vec2> samples;
  size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i];
    Vec2 b = poly[(i + 1) % n];
    double len = (b - a).norm();
    int steps = std::max(1, static_cast<int>(len / 0.5));
    for (int k = 0; k < steps; ++k) {
      samples.push_back(a + (b - a) * (static_cast<double>(k) / steps));
    }
  }
  Vec2 mean{};
  for (const Vec2& p : samples) mean += p;
  mean = mean / static_cast<double>(samples.size());
  double sxx = 0, syy = 0, sxy = 0;
  for (const Vec2& p : samples) {
    Vec2 d = p - mean;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  // Leading eigenvector of the 2x2 covariance.
  double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  Vec2 axis{std::cos(angle), std::sin(angle)};

  Vec2 center = polygon_centroid(poly);
  // Intersect the infinite line center + t*axis with the boundary.
  std::vector<double> ts;
  for (size_t i = 0; i < n; ++i) {
    Vec2 a = poly[i];
    Vec2 b = poly[(i + 1) % n];
    Vec2 e = b - a;
    double denom = axis.cross(e);
    if (std::abs(denom) < 1e-12) continue;
    double t = (a - center).cross(e) / denom;
    double u = (a - center).cross(axis) / denom;
    if (u >= -1e-9 && u <= 1.0 + 1e-9) ts.push_back(t);
  }
  if (ts.size() < 2) return {center, center};
  std::sort(ts.begin(), ts.end());
  // Longest interval whose midpoint lies inside.
  double best_len = -1.0, best_a = 0.0, best_b = 0.0;
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    Vec2 mid = center + axis * (0.5 * (ts[i] + ts[i + 1]));
    if (!point_in_polygon(mid, poly)) continue;
    double len = ts[i + 1] - ts[i];
    if (len > best_len) {
      best_len = len;
      best_a = ts[i];
      best_b = ts[i + 1];
    }
  }
  if (best_len <= 0.0) return {center, center};
  return {center + axis * best_a, center + axis * best_b};
}

std::vector<Pedestrian> spawn_pedestrians(const Scenario& scenario,
                                          const SpawnConfig& cfg,
                                          SpawnStats* stats) {
  if (cfg.mean_cluster_spacing <= 0.0 || cfg.mean_cluster_size <= 0.0 ||
      cfg.position_stddev <= 0.0 || cfg.desired_speed_mean <= 0.0 ||
      cfg.desired_speed_stddev <= 0.0) {
    throw ScenarioError("spawn config fields must be positive");
  }
  Rng rng(cfg.seed);
  std::vector<Pedestrian> peds;
  SpawnStats local;
  if (scenario.goals.empty()) {
    if (stats) *stats = local;
    return peds;
  }
  std::uint32_t next_id = 0;
  size_t goal_cursor = 0;

  for (const Region& region : scenario.regions) {
    if (region.kind != RegionKind::sidewalk) continue;
    std::vector<Vec2> line = polygon_centerline(region.polygon);
    double total = polyline_length(line);
    if (total < 1e-9) continue;
    Vec2 dir = (line[1] - line[0]).normalized();
    double s = 0.0;
    while (true) {
      s += rng.exponential(cfg.mean_cluster_spacing);
      if (s > total) break;
      local.clusters += 1;
      Vec2 anchor = line[0] + dir * s;
      int members = rng.geometric_from_one(cfg.mean_cluster_size);
      for (int m = 0; m < members; ++m) {
        Vec2 pos = anchor + Vec2{rng.normal(0.0, cfg.position_stddev),
                                 rng.normal(0.0, cfg.position_stddev)};
        double speed = std::clamp(
            rng.normal(cfg.desired_speed_mean, cfg.desired_speed_stddev), 0.3, 3.0);
        local.attempted += 1;
        if (!point_in_polygon(pos, region.polygon) ||
            polygon_boundary_distance(pos, region.polygon) < 1e-9) {
          local.discarded += 1;
          continue;
        }
        Pedestrian p;
        p.id = next_id++;
        p.position = pos;
        p.desired_speed = speed;
        p.goal_index = static_cast<int>(goal_cursor++ % scenario.goals.size());
        Vec2 to_goal = (scenario.goals[static_cast<size_t>(p.goal_index)] - pos).normalized();
        p.velocity = to_goal * speed;
        p.step_width = 0.1 * speed;
        peds.push_back(p);
      }
    }
  }
  if (stats) *stats = local;
  return peds;
}

}  // namespace pedplan
