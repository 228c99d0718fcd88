#include "pedplan/pedsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace pedplan {

namespace {

// Elliptic interaction distance b(r); r points from the other pedestrian
// toward the one the force acts on, step = v_beta * s_beta.
double interaction_b(Vec2 r, Vec2 step) {
  double nr = r.norm();
  double nrs = (r - step).norm();
  double sum = nr + nrs;
  return 0.5 * std::sqrt(sum * sum + step.norm_sq());
}

}  // namespace

Vec2 attractive_force(const Pedestrian& ped, const PolicyField& field,
                      const ActionSet& actions, const ForceParams& params) {
  Vec2 e = desired_direction(field, actions, ped.position);
  return (e * ped.desired_speed - ped.velocity) / params.tau;
}

Vec2 pedestrian_repulsion(const Pedestrian& a, const Pedestrian& b,
                          const ForceParams& params, bool* degenerate) {
  Vec2 r = a.position - b.position;
  if (r.norm() < 1e-12) {
    if (degenerate) *degenerate = true;
    return {10.0 * params.ped_amplitude / params.ped_range, 0.0};
  }
  Vec2 step = b.velocity * b.step_width;
  auto potential = [&](Vec2 rr) {
    return params.ped_amplitude * std::exp(-interaction_b(rr, step) / params.ped_range);
  };
  double h = params.fd_step;
  double fx = -(potential({r.x + h, r.y}) - potential({r.x - h, r.y})) / (2.0 * h);
  double fy = -(potential({r.x, r.y + h}) - potential({r.x, r.y - h})) / (2.0 * h);
  return {fx, fy};
}

double pedestrian_cutoff(const Pedestrian& b, const ForceParams& params) {
  return 10.0 * params.ped_range + (b.velocity * b.step_width).norm();
}

Vec2 vehicle_repulsion(const Pedestrian& ped, const VehicleFootprint& veh,
                       const ForceParams& params, bool* degenerate) {
  double best = std::numeric_limits<double>::infinity();
  PolylineHit best_hit;
  for (const auto& path : veh.predicted_paths) {
    if (path.empty()) continue;
    PolylineHit hit = closest_point_on_polyline(ped.position, path);
    if (hit.distance < best) {
      best = hit.distance;
      best_hit = hit;
    }
  }
  if (!std::isfinite(best)) return {};
  double cap = 10.0 * params.veh_amplitude / params.veh_range;
  if (best < 1e-9) {
    if (degenerate) *degenerate = true;
    return best_hit.tangent.perp() * cap;  // perpendicular-left of the path
  }
  double clearance = std::max(best - veh.body_radius, 0.0);
  if (clearance > 10.0 * params.veh_range) return {};
  Vec2 away = (ped.position - best_hit.point) / best;
  double mag = clearance < 1e-9
                   ? cap
                   : std::min(params.veh_amplitude / params.veh_range *
                                  std::exp(-clearance / params.veh_range),
                              cap);
  return away * mag;
}

double fov_weight(Vec2 e, Vec2 f, const ForceParams& params) {
  double n = f.norm();
  if (n < 1e-12) return 1.0;
  Vec2 toward_source = -f / n;
  return e.dot(toward_source) >= std::cos(params.fov_half_angle) ? 1.0
                                                                 : params.fov_scale;
}

Vec2 total_force(const Pedestrian& ped, std::span<const Pedestrian> others,
                 std::span<const VehicleFootprint> vehicles,
                 const PolicyField& field, const ActionSet& actions,
                 const ForceParams& params) {
  Vec2 e = desired_direction(field, actions, ped.position);
  Vec2 force = (e * ped.desired_speed - ped.velocity) / params.tau;
  for (const Pedestrian& other : others) {
    double cutoff = pedestrian_cutoff(other, params);
    if ((ped.position - other.position).norm() > cutoff) continue;
    Vec2 f = pedestrian_repulsion(ped, other, params);
    force += f * fov_weight(e, f, params);
  }
  for (const VehicleFootprint& veh : vehicles) {
    Vec2 f = vehicle_repulsion(ped, veh, params);
    force += f * fov_weight(e, f, params);
  }
  return force;
}

namespace {

struct SpatialHash {
  double cell = 1.0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> bins;

  static std::uint64_t key(int ix, int iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
           static_cast<std::uint32_t>(iy);
  }
  void insert(Vec2 p, std::uint32_t idx) {
    int ix = static_cast<int>(std::floor(p.x / cell));
    int iy = static_cast<int>(std::floor(p.y / cell));
    bins[key(ix, iy)].push_back(idx);
  }
  // Indices in the 3x3 neighborhood, ascending so force sums match the
  // naive evaluation order term for term.
  void gather(Vec2 p, std::vector<std::uint32_t>& out) const {
    out.clear();
    int ix = static_cast<int>(std::floor(p.x / cell));
    int iy = static_cast<int>(std::floor(p.y / cell));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        auto it = bins.find(key(ix + dx, iy + dy));
        if (it == bins.end()) continue;
        out.insert(out.end(), it->second.begin(), it->second.end());
      }
    }
    std::sort(out.begin(), out.end());
  }
};

}  // namespace

std::vector<Pedestrian> step_pedestrians(
    std::span<const Pedestrian> peds,
    std::span<const VehicleFootprint> vehicles,
    std::span<const PolicyField> fields, const ActionSet& actions,
    const ForceParams& params, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("step_pedestrians: dt must be positive");
  if (fields.empty() && !peds.empty()) {
    throw std::invalid_argument("step_pedestrians: no policy fields");
  }

  double max_step = 0.0;
  double max_cutoff = 10.0 * params.ped_range;
  for (const Pedestrian& p : peds) {
    max_step = std::max(max_step, (p.velocity * p.step_width).norm());
  }
  SpatialHash hash;
  hash.cell = max_cutoff + max_step + 1e-6;
  for (std::uint32_t i = 0; i < peds.size(); ++i) hash.insert(peds[i].position, i);

  std::vector<Pedestrian> next(peds.begin(), peds.end());
  std::vector<std::uint32_t> neighbors;
  std::vector<Pedestrian> local;
  for (std::uint32_t i = 0; i < peds.size(); ++i) {
    Pedestrian& p = next[i];
    if (p.arrived) {
      p.velocity = {};
      continue;
    }
    const PolicyField& field =
        fields[static_cast<size_t>(std::clamp(p.goal_index, 0,
                                              static_cast<int>(fields.size()) - 1))];
    hash.gather(p.position, neighbors);
    local.clear();
    for (std::uint32_t j : neighbors) {
      if (j != i) local.push_back(peds[j]);
    }
    // Crowd pressure can push a pedestrian past the grid edge; the policy
    // lookup is clamped back inside so the pull recovers them.
    Pedestrian query = peds[i];
    double margin = 0.5 * field.cell_size;
    query.position.x = std::clamp(query.position.x, field.origin.x + margin,
                                  field.origin.x + field.width * field.cell_size - margin);
    query.position.y = std::clamp(query.position.y, field.origin.y + margin,
                                  field.origin.y + field.height * field.cell_size - margin);
    Vec2 force = total_force(query, local, vehicles, field, actions, params);
    Vec2 v = p.velocity + force * dt;
    double cap = params.max_speed_factor * p.desired_speed;
    double speed = v.norm();
    if (speed > cap) v = v * (cap / speed);
    p.velocity = v;
    p.position += v * dt;  // position uses the updated velocity
    if ((p.position - field.goal).norm() < kArrivalRadius) {
      p.arrived = true;
      p.velocity = {};
    }
  }
  return next;
}

}  // namespace pedplan
