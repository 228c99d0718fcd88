#include "pedplan/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

namespace pedplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cells (other than the endpoints) whose closed rectangle the segment from
// cell center (0,0) to cell center (dx,dy) touches. Touching a corner counts,
// so diagonal moves cannot cut through blocked corners.
std::vector<std::pair<int, int>> crossed_cells(int dx, int dy) {
  std::vector<std::pair<int, int>> cells;
  int x_lo = std::min(0, dx), x_hi = std::max(0, dx);
  int y_lo = std::min(0, dy), y_hi = std::max(0, dy);
  for (int ix = x_lo; ix <= x_hi; ++ix) {
    for (int iy = y_lo; iy <= y_hi; ++iy) {
      if ((ix == 0 && iy == 0) || (ix == dx && iy == dy)) continue;
      // Slab clip of the segment p(t) = t*(dx,dy), t in [0,1], against
      // [ix-0.5, ix+0.5] x [iy-0.5, iy+0.5]; boundary contact counts.
      double t0 = 0.0, t1 = 1.0;
      bool ok = true;
      auto clip = [&](double dir, double lo, double hi) {
        if (std::abs(dir) < 1e-15) {
          if (lo > 0.0 || hi < 0.0) ok = false;
          return;
        }
        double ta = lo / dir, tb = hi / dir;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
      };
      clip(static_cast<double>(dx), ix - 0.5, ix + 0.5);
      if (ok) clip(static_cast<double>(dy), iy - 0.5, iy + 0.5);
      if (ok && t0 <= t1 + 1e-15) cells.emplace_back(ix, iy);
    }
  }
  return cells;
}

}  // namespace

ActionSet build_action_set(int n) {
  if (n < 4) throw PolicyError("action set needs n >= 4");
  struct Raw {
    int dx, dy;
    double len, angle;
  };
  std::vector<Raw> raw;
  int radius = 2;
  while (true) {
    raw.clear();
    for (int dx = -radius; dx <= radius; ++dx) {
      for (int dy = -radius; dy <= radius; ++dy) {
        if (dx == 0 && dy == 0) continue;
        raw.push_back({dx, dy, std::hypot((double)dx, (double)dy),
                       std::atan2((double)dy, (double)dx)});
      }
    }
    std::sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
      if (a.len != b.len) return a.len < b.len;
      return a.angle < b.angle;
    });
    // Keep the shortest offset per unique angle.
    std::vector<Raw> unique;
    for (const Raw& r : raw) {
      bool dup = std::any_of(unique.begin(), unique.end(), [&](const Raw& u) {
        return std::abs(u.angle - r.angle) < 1e-12;
      });
      if (!dup) unique.push_back(r);
      if (static_cast<int>(unique.size()) == n) break;
    }
    if (static_cast<int>(unique.size()) >= n) {
      ActionSet set;
      set.n_unique_angles = n;
      for (const Raw& u : unique) {
        ActionOffset a;
        a.dx = u.dx;
        a.dy = u.dy;
        a.length = u.len;
        a.angle = u.angle;
        a.crossed = crossed_cells(u.dx, u.dy);
        set.offsets.push_back(std::move(a));
      }
      return set;
    }
    ++radius;
  }
}

PolicyField value_iteration(const CostGrid& grid, Vec2 goal,
                            const ActionSet& actions, double tol,
                            int max_iter) {
  int gx, gy;
  grid.locate(goal, gx, gy);
  if (!grid.in_bounds(gx, gy)) throw PolicyError("goal outside grid");
  if (!grid.traversable[grid.index(gx, gy)]) {
    throw PolicyError("goal cell not traversable");
  }
  double min_cost = kInf;
  for (size_t i = 0; i < grid.cost.size(); ++i) {
    if (grid.traversable[i]) min_cost = std::min(min_cost, grid.cost[i]);
  }
  if (tol <= 0.0) tol = 1e-6 * (std::isfinite(min_cost) ? min_cost : 1.0);
  if (max_iter <= 0) max_iter = 10 * (grid.width + grid.height);

  PolicyField field;
  field.goal = goal;
  field.grid_hash = grid_hash(grid);
  field.origin = grid.origin;
  field.cell_size = grid.cell_size;
  field.width = grid.width;
  field.height = grid.height;
  field.n_actions = static_cast<int>(actions.offsets.size());
  field.tol = tol;
  field.cost_to_go.assign(grid.cost.size(), kInf);
  field.best_action.assign(grid.cost.size(), -1);
  int goal_idx = grid.index(gx, gy);
  field.cost_to_go[static_cast<size_t>(goal_idx)] = 0.0;

  auto relax_cell = [&](int ix, int iy) -> double {
    int idx = grid.index(ix, iy);
    if (!grid.traversable[static_cast<size_t>(idx)] || idx == goal_idx) return 0.0;
    double state_cost = grid.cost[static_cast<size_t>(idx)];
    double best = field.cost_to_go[static_cast<size_t>(idx)];
    for (const ActionOffset& a : actions.offsets) {
      int tx = ix + a.dx, ty = iy + a.dy;
      if (!grid.in_bounds(tx, ty)) continue;
      if (!grid.traversable[static_cast<size_t>(grid.index(tx, ty))]) continue;
      bool blocked = false;
      for (const auto& [cx, cy] : a.crossed) {
        int mx = ix + cx, my = iy + cy;
        if (!grid.in_bounds(mx, my) ||
            !grid.traversable[static_cast<size_t>(grid.index(mx, my))]) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      double v = field.cost_to_go[static_cast<size_t>(grid.index(tx, ty))];
      if (!std::isfinite(v)) continue;
      double candidate = a.length * grid.cell_size * state_cost + v;
      if (candidate < best) best = candidate;
    }
    double old = field.cost_to_go[static_cast<size_t>(idx)];
    field.cost_to_go[static_cast<size_t>(idx)] = best;
    if (!std::isfinite(old)) return std::isfinite(best) ? kInf : 0.0;
    return old - best;  // values only decrease
  };

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    int mode = sweep % 4;
    bool x_fwd = (mode == 0 || mode == 2);
    bool y_fwd = (mode == 0 || mode == 1);
    for (int yi = 0; yi < grid.height; ++yi) {
      int iy = y_fwd ? yi : grid.height - 1 - yi;
      for (int xi = 0; xi < grid.width; ++xi) {
        int ix = x_fwd ? xi : grid.width - 1 - xi;
        max_change = std::max(max_change, relax_cell(ix, iy));
      }
    }
    field.iterations = sweep + 1;
    if (max_change < tol) {
      field.converged = true;
      break;
    }
  }

  // Final argmin pass; ties go to the action closest in angle to the straight
  // line toward the goal point.
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      int idx = grid.index(ix, iy);
      if (!grid.traversable[static_cast<size_t>(idx)] || idx == goal_idx) continue;
      if (!std::isfinite(field.cost_to_go[static_cast<size_t>(idx)])) continue;
      double state_cost = grid.cost[static_cast<size_t>(idx)];
      Vec2 to_goal = goal - grid.cell_center(ix, iy);
      double goal_angle = std::atan2(to_goal.y, to_goal.x);
      double best_v = kInf;
      double best_angle_gap = kInf;
      int best_a = -1;
      for (size_t ai = 0; ai < actions.offsets.size(); ++ai) {
        const ActionOffset& a = actions.offsets[ai];
        int tx = ix + a.dx, ty = iy + a.dy;
        if (!grid.in_bounds(tx, ty)) continue;
        if (!grid.traversable[static_cast<size_t>(grid.index(tx, ty))]) continue;
        bool blocked = false;
        for (const auto& [cx, cy] : a.crossed) {
          int mx = ix + cx, my = iy + cy;
          if (!grid.in_bounds(mx, my) ||
              !grid.traversable[static_cast<size_t>(grid.index(mx, my))]) {
            blocked = true;
            break;
          }
        }
        if (blocked) continue;
        double v = field.cost_to_go[static_cast<size_t>(grid.index(tx, ty))];
        if (!std::isfinite(v)) continue;
        double candidate = a.length * grid.cell_size * state_cost + v;
        double gap = std::abs(std::remainder(a.angle - goal_angle, 2.0 * kPi));
        if (candidate < best_v - 1e-12 ||
            (candidate < best_v + 1e-12 && gap < best_angle_gap)) {
          best_v = candidate;
          best_angle_gap = gap;
          best_a = static_cast<int>(ai);
        }
      }
      field.best_action[static_cast<size_t>(idx)] = static_cast<std::int16_t>(best_a);
    }
  }
  return field;
}

Vec2 desired_direction(const PolicyField& field, const ActionSet& actions,
                       Vec2 position) {
  int ix, iy;
  field.locate(position, ix, iy);
  if (!field.in_bounds(ix, iy)) throw PolicyError("position outside grid bounds");
  int idx = field.index(ix, iy);

  int ggx, ggy;
  field.locate(field.goal, ggx, ggy);
  if (ix == ggx && iy == ggy) {
    return (field.goal - position).normalized();  // zero when coincident
  }

  std::int16_t a = field.best_action[static_cast<size_t>(idx)];
  if (a >= 0) {
    const ActionOffset& off = actions.offsets[static_cast<size_t>(a)];
    return Vec2{static_cast<double>(off.dx), static_cast<double>(off.dy)}.normalized();
  }

  // Non-traversable or unreachable cell: head for the nearest cell that has a
  // finite cost-to-go.
  double best = kInf;
  Vec2 target = field.goal;
  for (int ty = 0; ty < field.height; ++ty) {
    for (int tx = 0; tx < field.width; ++tx) {
      if (!std::isfinite(field.cost_to_go[static_cast<size_t>(field.index(tx, ty))])) {
        continue;
      }
      Vec2 c = field.cell_center(tx, ty);
      double d = (c - position).norm_sq();
      if (d < best) {
        best = d;
        target = c;
      }
    }
  }
  return (target - position).normalized();
}

namespace {
constexpr char kMagic[8] = {'P', 'P', 'O', 'L', 'I', 'C', 'Y', '1'};
}

void save_policy(const PolicyField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PolicyError("cannot write policy cache: " + path);
  out.write(kMagic, sizeof(kMagic));
  auto put = [&out](const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  put(&field.grid_hash, 8);
  put(&field.goal, sizeof(field.goal));
  std::int32_t n = field.n_actions;
  put(&n, 4);
  put(&field.tol, 8);
  std::int32_t w = field.width, h = field.height;
  put(&w, 4);
  put(&h, 4);
  put(&field.origin, sizeof(field.origin));
  put(&field.cell_size, 8);
  put(field.cost_to_go.data(), field.cost_to_go.size() * 8);
  put(field.best_action.data(), field.best_action.size() * 2);
  if (!out) throw PolicyError("short write on policy cache: " + path);
}

bool load_policy(const std::string& path, PolicyField& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) return false;
  auto get = [&in](void* p, size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  };
  PolicyField f;
  get(&f.grid_hash, 8);
  get(&f.goal, sizeof(f.goal));
  std::int32_t n = 0;
  get(&n, 4);
  f.n_actions = n;
  get(&f.tol, 8);
  std::int32_t w = 0, h = 0;
  get(&w, 4);
  get(&h, 4);
  f.width = w;
  f.height = h;
  get(&f.origin, sizeof(f.origin));
  get(&f.cell_size, 8);
  if (!in || w <= 0 || h <= 0) return false;
  size_t cells = static_cast<size_t>(w) * static_cast<size_t>(h);
  f.cost_to_go.resize(cells);
  f.best_action.resize(cells);
  get(f.cost_to_go.data(), cells * 8);
  get(f.best_action.data(), cells * 2);
  if (!in) return false;
  f.converged = true;
  out = std::move(f);
  return true;
}

std::string policy_cache_name(std::uint64_t hash, Vec2 goal, int n, double tol) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "policy_%016llx_%.3f_%.3f_n%d_t%.3e.bin",
                static_cast<unsigned long long>(hash), goal.x, goal.y, n, tol);
  return buf;
}

}  // namespace pedplan
