#pragma once

#include <string>
#include <vector>

#include "pedplan/geometry.hpp"

namespace pedplan {

struct FrenetState {
  double s = 0.0;
  double s_dot = 0.0;
  double s_ddot = 0.0;
  double d = 0.0;
  double d_dot = 0.0;
  double d_ddot = 0.0;
};

struct EgoState {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double acceleration = 0.0;
  FrenetState frenet;
};

struct TrajPoint {
  double t = 0.0;
  Vec2 position;
  double heading = 0.0;
  double v = 0.0;      // signed speed along the path
  double a = 0.0;      // dv/dt
  double curvature = 0.0;
  FrenetState frenet;
};

struct Trajectory {
  double dt = 0.1;
  double horizon = 0.0;
  std::vector<TrajPoint> points;
  double base_cost = 0.0;
  bool feasible = false;
  std::vector<std::string> violations;
  bool is_fallback = false;
  // Sampling labels, kept for the trace.
  double d_end = 0.0;
  double v_end = 0.0;
};

}  // namespace pedplan
