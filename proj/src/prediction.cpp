#include "pedplan/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pedplan {

std::vector<GaussianState> predict_pedestrian(const Pedestrian& ped,
                                              double horizon, double dt,
                                              Sym2 q, Sym2 sigma0) {
  if (horizon <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("predict_pedestrian: horizon and dt must be positive");
  }
  int steps = static_cast<int>(std::round(horizon / dt));
  std::vector<GaussianState> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    double t = k * dt;
    out.push_back({t, ped.position + ped.velocity * t, sigma0 + q * t});
  }
  return out;
}

int match_lane(Vec2 position, double heading, std::span<const Lane> lanes) {
  Vec2 dir{std::cos(heading), std::sin(heading)};
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < lanes.size(); ++i) {
    PolylineHit hit = closest_point_on_polyline(position, lanes[i].centerline);
    if (hit.distance > 0.5 * lanes[i].width + 0.5) continue;
    if (hit.tangent.dot(dir) < 0.5) continue;  // roughly aligned
    if (hit.distance < best_dist) {
      best_dist = hit.distance;
      best = static_cast<int>(i);
    }
  }
  return best;
}

namespace {

constexpr double kPathStep = 0.2;  // m between path samples

// Walks `length` meters along the lane from `arc`, recursing into successors.
void follow_lane(const std::vector<Lane>& lanes, size_t lane_idx, double arc,
                 double length, std::vector<Vec2> prefix,
                 std::vector<std::vector<Vec2>>& out, int depth) {
  const Lane& lane = lanes[lane_idx];
  double total = polyline_length(lane.centerline);
  double remaining = length;
  double s = arc;
  while (remaining > 1e-9 && s < total - 1e-9) {
    double step = std::min(kPathStep, std::min(remaining, total - s));
    s += step;
    remaining -= step;
    // point at arc length s
    double acc = 0.0;
    Vec2 pt = lane.centerline.back();
    for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
      double seg = (lane.centerline[i + 1] - lane.centerline[i]).norm();
      if (acc + seg >= s - 1e-12) {
        double t = seg > 1e-12 ? (s - acc) / seg : 0.0;
        pt = lane.centerline[i] + (lane.centerline[i + 1] - lane.centerline[i]) * t;
        break;
      }
      acc += seg;
    }
    prefix.push_back(pt);
  }
  if (remaining > 1e-9 && depth < 4 && !lane.successors.empty()) {
    for (const std::string& succ : lane.successors) {
      for (size_t j = 0; j < lanes.size(); ++j) {
        if (lanes[j].id == succ) {
          follow_lane(lanes, j, 0.0, remaining, prefix, out, depth + 1);
        }
      }
    }
    return;
  }
  out.push_back(std::move(prefix));
}

}  // namespace

std::vector<std::vector<Vec2>> predict_vehicle_paths(
    Vec2 position, double heading, double speed, std::span<const Lane> lanes,
    double horizon, bool* unmatched) {
  double reach = std::max(0.0, speed) * horizon;
  if (reach < 1e-9) {
    return {{position}};
  }
  int lane_idx = match_lane(position, heading, lanes);
  if (lane_idx < 0) {
    if (unmatched) *unmatched = true;
    Vec2 dir{std::cos(heading), std::sin(heading)};
    std::vector<Vec2> line{position};
    int steps = std::max(1, static_cast<int>(std::ceil(reach / kPathStep)));
    for (int k = 1; k <= steps; ++k) {
      line.push_back(position + dir * (reach * k / steps));
    }
    return {std::move(line)};
  }
  std::vector<Lane> lane_vec(lanes.begin(), lanes.end());
  PolylineHit hit = closest_point_on_polyline(position, lane_vec[static_cast<size_t>(lane_idx)].centerline);
  std::vector<std::vector<Vec2>> out;
  follow_lane(lane_vec, static_cast<size_t>(lane_idx), hit.arc, reach, {position},
              out, 0);
  return out;
}

std::vector<GaussianState> predict_vehicle_gaussian(Vec2 position,
                                                    double heading,
                                                    double speed,
                                                    double horizon, double dt,
                                                    double q_long,
                                                    double q_lat,
                                                    Sym2 sigma0) {
  if (horizon <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("predict_vehicle_gaussian: horizon and dt must be positive");
  }
  Vec2 dir{std::cos(heading), std::sin(heading)};
  Sym2 growth = Sym2::diag(q_long, q_lat).rotated(heading);
  int steps = static_cast<int>(std::round(horizon / dt));
  std::vector<GaussianState> out;
  out.reserve(static_cast<size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    double t = k * dt;
    out.push_back({t, position + dir * (speed * t), sigma0 + growth * t});
  }
  return out;
}

}  // namespace pedplan
