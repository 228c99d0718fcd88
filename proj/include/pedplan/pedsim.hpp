#pragma once

#include <span>
#include <vector>

#include "pedplan/pedestrian.hpp"
#include "pedplan/policy.hpp"

namespace pedplan {

struct ForceParams {
  double tau = 0.5;             // s, relaxation time
  double ped_amplitude = 2.1;   // pedestrian potential amplitude
  double ped_range = 0.3;       // m, pedestrian potential range
  double veh_amplitude = 6.0;   // vehicle potential amplitude
  double veh_range = 1.5;       // m, vehicle potential range
  double fov_half_angle = 100.0 * kPi / 180.0;  // rad
  double fov_scale = 0.5;       // weight outside the field of view
  double max_speed_factor = 1.3;  // cap = factor * desired speed
  double fd_step = 1e-3;        // m, finite-difference step for the gradient
};

struct VehicleFootprint {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  // Constant-velocity predictions, one polyline per followable lane branch,
  // each starting at the vehicle position.
  std::vector<std::vector<Vec2>> predicted_paths;
  // Body clearance swept along the paths; the repulsion distance is measured
  // from this hull, so a parked vehicle still repels across its footprint.
  double body_radius = 0.0;
};

// (e v0 - v) / tau with e from the policy field.
Vec2 attractive_force(const Pedestrian& ped, const PolicyField& field,
                      const ActionSet& actions, const ForceParams& params);

// Repulsion of a from b, central finite differences of the elliptic
// exponential potential. Degenerate (coincident) pairs produce a capped
// force along +x and set *degenerate.
Vec2 pedestrian_repulsion(const Pedestrian& a, const Pedestrian& b,
                          const ForceParams& params,
                          bool* degenerate = nullptr);

// Analytic gradient of the exponential of the distance to the closest point
// over the vehicle's predicted paths. Exactly zero beyond 10 * veh_range.
Vec2 vehicle_repulsion(const Pedestrian& ped, const VehicleFootprint& veh,
                       const ForceParams& params, bool* degenerate = nullptr);

// 1 when the force source (direction -f) lies within the half-angle fov of
// e, otherwise fov_scale. Zero forces weigh 1.
double fov_weight(Vec2 e, Vec2 f, const ForceParams& params);

// Skip radius for pedestrian pair terms; pairs farther apart contribute an
// exact zero.
double pedestrian_cutoff(const Pedestrian& b, const ForceParams& params);

Vec2 total_force(const Pedestrian& ped, std::span<const Pedestrian> others,
                 std::span<const VehicleFootprint> vehicles,
                 const PolicyField& field, const ActionSet& actions,
                 const ForceParams& params);

// One semi-implicit Euler step for every pedestrian: velocity first, then
// position with the new velocity. Pedestrians within 0.5 m of their goal are
// frozen in place. Neighbor gathering uses a uniform spatial hash; the result
// is identical to the naive pairwise sum.
std::vector<Pedestrian> step_pedestrians(
    std::span<const Pedestrian> peds,
    std::span<const VehicleFootprint> vehicles,
    std::span<const PolicyField> fields, const ActionSet& actions,
    const ForceParams& params, double dt);

inline constexpr double kArrivalRadius = 0.5;  // m

}  // namespace pedplan
