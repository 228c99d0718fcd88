#pragma once

#include <cstdint>

#include "pedplan/geometry.hpp"

namespace pedplan {

struct Pedestrian {
  std::uint32_t id = 0;
  Vec2 position;
  Vec2 velocity;
  double desired_speed = 1.4;  // m/s, clamped to [0.3, 3.0] at spawn
  int goal_index = 0;
  double step_width = 0.14;  // m
  double radius = 0.3;       // m, used by the simulation-level collision check
  bool arrived = false;
};

}  // namespace pedplan
