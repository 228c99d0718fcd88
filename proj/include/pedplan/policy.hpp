#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pedplan/scenario.hpp"

namespace pedplan {

struct ActionOffset {
  int dx = 0;
  int dy = 0;
  double length = 0.0;  // cell units
  double angle = 0.0;
  // Cells strictly between source and target that the straight transition
  // touches; a transition is forbidden if any of them is non-traversable.
  std::vector<std::pair<int, int>> crossed;
};

struct ActionSet {
  std::vector<ActionOffset> offsets;
  int n_unique_angles = 0;
};

// The n shortest integer offsets with pairwise distinct angles, ordered by
// length then angle. n >= 4.
ActionSet build_action_set(int n);

struct PolicyField {
  Vec2 goal;
  std::vector<double> cost_to_go;        // row-major; +inf when unreachable
  std::vector<std::int16_t> best_action; // index into actions, -1 when none
  std::uint64_t grid_hash = 0;
  Vec2 origin;
  double cell_size = 1.0;
  int width = 0;
  int height = 0;
  int n_actions = 0;
  double tol = 0.0;
  int iterations = 0;
  bool converged = false;

  int index(int ix, int iy) const { return iy * width + ix; }
  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }
  Vec2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * cell_size, origin.y + (iy + 0.5) * cell_size};
  }
  void locate(Vec2 p, int& ix, int& iy) const {
    ix = static_cast<int>(std::floor((p.x - origin.x) / cell_size));
    iy = static_cast<int>(std::floor((p.y - origin.y) / cell_size));
  }
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic-transition value iteration over the cost grid. Action cost is
// transition length (m) times the source cell's state cost. Gauss-Seidel
// sweeps with alternating scan order; stops when the largest change drops
// below tol or max_iter sweeps have run. tol <= 0 picks 1e-6 * min cell cost,
// max_iter <= 0 picks 10 * (width + height).
PolicyField value_iteration(const CostGrid& grid, Vec2 goal,
                            const ActionSet& actions, double tol = 0.0,
                            int max_iter = 0);

// Unit desired-walking direction at a position inside the field bounds.
Vec2 desired_direction(const PolicyField& field, const ActionSet& actions,
                       Vec2 position);

// Binary cache, one file per (grid, goal, n, tol).
void save_policy(const PolicyField& field, const std::string& path);
bool load_policy(const std::string& path, PolicyField& out);
std::string policy_cache_name(std::uint64_t grid_hash, Vec2 goal, int n,
                              double tol);

}  // namespace pedplan
