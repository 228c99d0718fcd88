#include "pedplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pedplan {

ReferenceLine::ReferenceLine(std::vector<Vec2> points) : points_(std::move(points)) {
  cum_.resize(points_.size(), 0.0);
  for (size_t i = 1; i < points_.size(); ++i) {
    cum_[i] = cum_[i - 1] + (points_[i] - points_[i - 1]).norm();
  }
}

Vec2 ReferenceLine::point_at(double s) const {
  if (points_.empty()) return {};
  if (points_.size() == 1 || s <= 0.0) return points_.front();
  if (s >= length()) {
    // Extrapolate along the final segment so long candidates stay defined.
    Vec2 t = (points_.back() - points_[points_.size() - 2]).normalized();
    return points_.back() + t * (s - length());
  }
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  size_t i = static_cast<size_t>(std::distance(cum_.begin(), it)) - 1;
  double seg = cum_[i + 1] - cum_[i];
  double t = seg > 1e-12 ? (s - cum_[i]) / seg : 0.0;
  return points_[i] + (points_[i + 1] - points_[i]) * t;
}

Vec2 ReferenceLine::tangent_at(double s) const {
  if (points_.size() < 2) return {1.0, 0.0};
  if (s <= 0.0) return (points_[1] - points_[0]).normalized();
  if (s >= length()) {
    return (points_.back() - points_[points_.size() - 2]).normalized();
  }
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  size_t i = static_cast<size_t>(std::distance(cum_.begin(), it)) - 1;
  return (points_[i + 1] - points_[i]).normalized();
}

double ReferenceLine::curvature_at(double s) const {
  if (points_.size() < 3) return 0.0;
  double h = 0.5;
  Vec2 t0 = tangent_at(std::max(0.0, s - h));
  Vec2 t1 = tangent_at(std::min(length(), s + h));
  double dtheta = std::atan2(t0.cross(t1), t0.dot(t1));
  return dtheta / (2.0 * h);
}

ReferenceLine::Projection ReferenceLine::project(Vec2 p) const {
  Projection out;
  if (points_.size() < 2) return out;
  PolylineHit hit = closest_point_on_polyline(p, points_);
  out.s = hit.arc;
  Vec2 offset = p - hit.point;
  out.d = hit.tangent.cross(offset) >= 0.0 ? offset.norm() : -offset.norm();
  return out;
}

const char* profile_name(PlannerProfile p) {
  switch (p) {
    case PlannerProfile::risk_aware: return "risk_aware";
    case PlannerProfile::aggressive: return "aggressive";
    case PlannerProfile::baseline: return "baseline";
  }
  return "?";
}

std::optional<PlannerProfile> parse_profile(const std::string& name) {
  if (name == "risk_aware") return PlannerProfile::risk_aware;
  if (name == "aggressive") return PlannerProfile::aggressive;
  if (name == "baseline") return PlannerProfile::baseline;
  return std::nullopt;
}

namespace {

// x(t) = c0 + c1 t + ... + c5 t^5 matching position/velocity/acceleration at
// both ends.
struct Quintic {
  double c[6] = {};

  static Quintic boundary(double x0, double v0, double a0, double x1,
                          double v1, double a1, double T) {
    Quintic q;
    q.c[0] = x0;
    q.c[1] = v0;
    q.c[2] = 0.5 * a0;
    double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
    double b0 = x1 - (x0 + v0 * T + 0.5 * a0 * T2);
    double b1 = v1 - (v0 + a0 * T);
    double b2 = a1 - a0;
    // Closed-form inverse of the boundary matrix.
    q.c[3] = (20.0 * b0 - 8.0 * b1 * T + b2 * T2) / (2.0 * T3);
    q.c[4] = (-30.0 * b0 + 14.0 * b1 * T - 2.0 * b2 * T2) / (2.0 * T4);
    q.c[5] = (12.0 * b0 - 6.0 * b1 * T + b2 * T2) / (2.0 * T5);
    return q;
  }
  double value(double t) const {
    return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
  }
  double d1(double t) const {
    return c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])));
  }
  double d2(double t) const {
    return 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]));
  }
  double d3(double t) const { return 6 * c[3] + t * (24 * c[4] + t * 60 * c[5]); }
};

// s(t) = c0 + ... + c4 t^4 matching terminal velocity/acceleration only
// (velocity keeping; the end position floats).
struct QuarticVel {
  double c[5] = {};

  static QuarticVel boundary(double s0, double v0, double a0, double v1,
                             double a1, double T) {
    QuarticVel q;
    q.c[0] = s0;
    q.c[1] = v0;
    q.c[2] = 0.5 * a0;
    double T2 = T * T, T3 = T2 * T;
    double b0 = v1 - (v0 + a0 * T);
    double b1 = a1 - a0;
    q.c[3] = (3.0 * b0 - b1 * T) / (3.0 * T2);
    q.c[4] = (-2.0 * b0 + b1 * T) / (4.0 * T3);
    return q;
  }
  double value(double t) const {
    return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
  }
  double d1(double t) const {
    return c[1] + t * (2 * c[2] + t * (3 * c[3] + t * 4 * c[4]));
  }
  double d2(double t) const { return 2 * c[2] + t * (6 * c[3] + t * 12 * c[4]); }
  double d3(double t) const { return 6 * c[3] + t * 24 * c[4]; }
};

void finish_trajectory(Trajectory& traj, const ReferenceLine& ref) {
  // Cartesian pose, speed, heading per point from the Frenet samples.
  double prev_heading = 0.0;
  bool have_heading = false;
  for (TrajPoint& pt : traj.points) {
    Vec2 tangent = ref.tangent_at(pt.frenet.s);
    Vec2 normal = tangent.perp();
    double kappa_ref = ref.curvature_at(pt.frenet.s);
    pt.position = ref.point_at(pt.frenet.s) + normal * pt.frenet.d;
    double v_lon = pt.frenet.s_dot * (1.0 - kappa_ref * pt.frenet.d);
    Vec2 vel = tangent * v_lon + normal * pt.frenet.d_dot;
    double speed = vel.norm();
    if (speed > 1e-9) {
      pt.heading = std::atan2(vel.y, vel.x);
      prev_heading = pt.heading;
      have_heading = true;
    } else {
      pt.heading = have_heading ? prev_heading
                                : std::atan2(tangent.y, tangent.x);
    }
    pt.v = v_lon >= 0.0 ? speed : -speed;
  }
  // dv/dt and heading-rate curvature from the samples.
  size_t n = traj.points.size();
  for (size_t k = 0; k < n; ++k) {
    size_t k0 = k > 0 ? k - 1 : k;
    size_t k1 = k + 1 < n ? k + 1 : k;
    double dt_span = (k1 - k0) * traj.dt;
    traj.points[k].a =
        dt_span > 0.0 ? (traj.points[k1].v - traj.points[k0].v) / dt_span : 0.0;
    double ds = (traj.points[k1].position - traj.points[k0].position).norm();
    if (ds > 1e-9) {
      double dtheta = std::remainder(
          traj.points[k1].heading - traj.points[k0].heading, 2.0 * kPi);
      traj.points[k].curvature = dtheta / ds;
    } else {
      traj.points[k].curvature = 0.0;
    }
  }
}

}  // namespace

std::vector<Trajectory> generate_candidates(const EgoState& state,
                                            const ReferenceLine& reference,
                                            const SamplingConfig& cfg) {
  if (reference.empty()) throw std::invalid_argument("generate_candidates: empty reference");
  std::vector<Trajectory> out;
  out.reserve(cfg.horizons.size() * cfg.v_end_factors.size() * cfg.d_end.size());
  const FrenetState& f = state.frenet;
  for (double T : cfg.horizons) {
    int steps = std::max(1, static_cast<int>(std::round(T / cfg.dt)));
    for (double vf : cfg.v_end_factors) {
      double v_end = vf * cfg.desired_speed;
      QuarticVel lon = QuarticVel::boundary(f.s, f.s_dot, f.s_ddot, v_end, 0.0, T);
      for (double d_end : cfg.d_end) {
        Quintic lat = Quintic::boundary(f.d, f.d_dot, f.d_ddot, d_end, 0.0, 0.0, T);
        Trajectory traj;
        traj.dt = cfg.dt;
        traj.horizon = T;
        traj.d_end = d_end;
        traj.v_end = v_end;
        traj.points.resize(static_cast<size_t>(steps) + 1);
        for (int k = 0; k <= steps; ++k) {
          double t = k * cfg.dt;
          TrajPoint& pt = traj.points[static_cast<size_t>(k)];
          pt.t = t;
          pt.frenet.s = lon.value(t);
          pt.frenet.s_dot = lon.d1(t);
          pt.frenet.s_ddot = lon.d2(t);
          pt.frenet.d = lat.value(t);
          pt.frenet.d_dot = lat.d1(t);
          pt.frenet.d_ddot = lat.d2(t);
        }
        finish_trajectory(traj, reference);
        out.push_back(std::move(traj));
      }
    }
  }
  return out;
}

bool feasibility_check(Trajectory& traj, const KinematicLimits& limits) {
  constexpr double kTol = 1e-9;
  traj.violations.clear();
  bool v_neg = false, v_over = false, a_over = false, k_over = false;
  for (const TrajPoint& pt : traj.points) {
    if (pt.v < -kTol) v_neg = true;
    if (pt.v > limits.v_max + kTol) v_over = true;
    if (std::abs(pt.a) > limits.a_max + kTol) a_over = true;
    if (std::abs(pt.curvature) > limits.kappa_max + kTol) k_over = true;
  }
  if (v_neg) traj.violations.push_back("v_negative");
  if (v_over) traj.violations.push_back("v_max");
  if (a_over) traj.violations.push_back("a_max");
  if (k_over) traj.violations.push_back("kappa_max");
  traj.feasible = traj.violations.empty();
  return traj.feasible;
}

double base_cost(const Trajectory& traj, const CostWeights& weights,
                 double desired_speed, const Polygon* goal_region) {
  double dt = traj.dt;
  double jerk_term = 0.0, vel_term = 0.0, lat_term = 0.0;
  for (size_t k = 0; k < traj.points.size(); ++k) {
    const TrajPoint& pt = traj.points[k];
    if (k + 1 < traj.points.size()) {
      const TrajPoint& nx = traj.points[k + 1];
      double jl = (nx.frenet.s_ddot - pt.frenet.s_ddot) / dt;
      double jd = (nx.frenet.d_ddot - pt.frenet.d_ddot) / dt;
      jerk_term += (jl * jl + jd * jd) * dt;
    }
    double dv = pt.v - desired_speed;
    vel_term += dv * dv * dt;
    lat_term += pt.frenet.d * pt.frenet.d * dt;
  }
  double terminal = 0.0;
  if (goal_region && !goal_region->empty() && !traj.points.empty()) {
    terminal = distance_to_polygon(traj.points.back().position, *goal_region);
  }
  return weights.jerk * jerk_term + weights.velocity * vel_term +
         weights.lateral * lat_term + weights.terminal * terminal;
}

Trajectory braking_fallback(const EgoState& state, const ReferenceLine& reference,
                            const SamplingConfig& cfg) {
  const FrenetState& f = state.frenet;
  double decel = std::abs(cfg.limits.a_min);
  double v0 = std::max(0.0, f.s_dot);
  double t_stop = decel > 1e-9 ? v0 / decel : 0.0;
  double horizon = std::max(1.0, t_stop + 0.5);
  int steps = std::max(1, static_cast<int>(std::round(horizon / cfg.dt)));
  Trajectory traj;
  traj.dt = cfg.dt;
  traj.horizon = horizon;
  traj.is_fallback = true;
  traj.feasible = true;
  traj.d_end = f.d;
  traj.v_end = 0.0;
  traj.points.resize(static_cast<size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    double t = k * cfg.dt;
    TrajPoint& pt = traj.points[static_cast<size_t>(k)];
    pt.t = t;
    if (t < t_stop) {
      pt.frenet.s = f.s + v0 * t - 0.5 * decel * t * t;
      pt.frenet.s_dot = v0 - decel * t;
      pt.frenet.s_ddot = -decel;
    } else {
      pt.frenet.s = f.s + (decel > 1e-9 ? 0.5 * v0 * v0 / decel : 0.0);
      pt.frenet.s_dot = 0.0;
      pt.frenet.s_ddot = 0.0;
    }
    pt.frenet.d = f.d;
    pt.frenet.d_dot = 0.0;
    pt.frenet.d_ddot = 0.0;
  }
  finish_trajectory(traj, reference);
  return traj;
}

namespace {

// Constant-velocity means are only treated as hard occupancy over this
// window; beyond it the spread of the prediction makes the probabilistic
// filter the right authority.
constexpr double kMeanOverlapWindow = 2.0;  // s

// The hard mean-occupancy filter uses a wider margin than the risk box; the
// probabilistic assessment already covers body extent via the inflation.
constexpr double kMeanOverlapMargin = 0.8;  // m

// True when an ego box within the window covers a predicted mean position;
// the deterministic part of the safety funnel.
bool sweeps_through_mean(const Trajectory& traj, const PredictionSet& preds,
                         const EgoBoxDims& dims) {
  double hl = dims.half_length + kMeanOverlapMargin;
  double hw = dims.half_width + kMeanOverlapMargin;
  size_t window = static_cast<size_t>(kMeanOverlapWindow / traj.dt) + 1;
  for (const AgentPrediction& agent : preds.agents) {
    size_t steps = std::min({traj.points.size(), agent.states.size(), window});
    for (size_t k = 0; k < steps; ++k) {
      const TrajPoint& pt = traj.points[k];
      if (obb_contains(pt.position, pt.heading, hl, hw, agent.states[k].mean)) {
        return true;
      }
    }
  }
  return false;
}

double probability_sum(const Trajectory& traj, const PredictionSet& preds,
                       const EgoBoxDims& dims) {
  double sum = 0.0;
  double half_diag = std::hypot(dims.half_length + dims.inflation,
                                dims.half_width + dims.inflation);
  for (const AgentPrediction& agent : preds.agents) {
    size_t steps = std::min(traj.points.size(), agent.states.size());
    for (size_t k = 0; k < steps; ++k) {
      const TrajPoint& pt = traj.points[k];
      const GaussianState& gs = agent.states[k];
      double reach = half_diag + 6.0 * std::sqrt(std::max(gs.cov.trace(), 0.0)) + 0.1;
      if ((gs.mean - pt.position).norm_sq() > reach * reach) continue;
      EgoBox box{pt.position, pt.heading, dims.half_length, dims.half_width,
                 dims.inflation};
      sum += collision_probability(gs, box);
    }
  }
  return sum;
}

}  // namespace

PlanResult plan(const EgoState& state, const PlanEnv& env,
                const PredictionSet& preds, const SamplingConfig& cfg,
                const RiskThresholds& thresholds, const HarmCoeffs& coeffs,
                PlannerProfile profile) {
  if (!env.reference) throw std::invalid_argument("plan: missing reference line");
  PlanResult result;
  std::vector<Trajectory> candidates = generate_candidates(state, *env.reference, cfg);
  result.stats.total = static_cast<int>(candidates.size());

  std::vector<size_t> feasible_idx;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (feasibility_check(candidates[i], cfg.limits)) {
      candidates[i].base_cost =
          base_cost(candidates[i], cfg.weights, cfg.desired_speed, env.goal_region);
      if (profile == PlannerProfile::baseline) {
        candidates[i].base_cost +=
            cfg.weights.probability * probability_sum(candidates[i], preds, env.ego_box);
      }
      feasible_idx.push_back(i);
    }
  }
  result.stats.feasible = static_cast<int>(feasible_idx.size());
  std::sort(feasible_idx.begin(), feasible_idx.end(), [&](size_t a, size_t b) {
    if (candidates[a].base_cost != candidates[b].base_cost) {
      return candidates[a].base_cost < candidates[b].base_cost;
    }
    return a < b;
  });

  RiskThresholds effective = thresholds;
  if (profile == PlannerProfile::aggressive) {
    effective.h_max = 1.0;  // harm is strictly below 1
    effective.r_max = std::numeric_limits<double>::infinity();
  } else if (profile == PlannerProfile::baseline) {
    effective.h_max = std::numeric_limits<double>::infinity();
    effective.r_max = std::numeric_limits<double>::infinity();
  }
  bool deterministic_filter = profile != PlannerProfile::aggressive;

  int selected = -1;
  for (size_t idx : feasible_idx) {
    const Trajectory& cand = candidates[idx];
    if (deterministic_filter && sweeps_through_mean(cand, preds, env.ego_box)) {
      continue;
    }
    if (profile == PlannerProfile::risk_aware) {
      RiskReport quick = assess_trajectory(cand, preds, env.ego_box, env.ego_mass,
                                           coeffs, effective, AssessMode::validate);
      if (!quick.valid) continue;
    }
    result.stats.valid += 1;
    selected = static_cast<int>(idx);
    break;
  }

  if (selected >= 0) {
    result.trajectory = std::move(candidates[static_cast<size_t>(selected)]);
    result.stats.selected = selected;
  } else {
    result.trajectory = braking_fallback(state, *env.reference, cfg);
    result.fallback = true;
  }
  result.risk = assess_trajectory(result.trajectory, preds, env.ego_box,
                                  env.ego_mass, coeffs, effective, AssessMode::full);
  return result;
}

}  // namespace pedplan
