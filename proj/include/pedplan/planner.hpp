#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pedplan/risk.hpp"
#include "pedplan/trajectory.hpp"

namespace pedplan {

// Arc-length parameterized reference path.
class ReferenceLine {
 public:
  ReferenceLine() = default;
  explicit ReferenceLine(std::vector<Vec2> points);

  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  bool empty() const { return points_.size() < 2; }
  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;
  double curvature_at(double s) const;
  struct Projection {
    double s = 0.0;
    double d = 0.0;  // signed, positive to the left of the tangent
  };
  Projection project(Vec2 p) const;
  const std::vector<Vec2>& points() const { return points_; }

 private:
  std::vector<Vec2> points_;
  std::vector<double> cum_;
};

struct CostWeights {
  double jerk = 0.1;
  double velocity = 1.0;
  double lateral = 1.0;
  double terminal = 0.5;
  double probability = 200.0;  // baseline profile only
};

struct KinematicLimits {
  double v_max = 14.0;
  double a_max = 3.0;
  double a_min = -8.0;  // braking fallback deceleration
  double kappa_max = 0.2;
};

struct SamplingConfig {
  std::vector<double> d_end{-1.0, -0.5, 0.0, 0.5, 1.0};
  std::vector<double> v_end_factors{0.0, 0.25, 0.5, 0.75, 1.0, 1.25};
  std::vector<double> horizons{2.0, 3.0, 4.0};
  double desired_speed = 5.0;
  double dt = 0.1;
  KinematicLimits limits;
  CostWeights weights;
};

enum class PlannerProfile { risk_aware, aggressive, baseline };

const char* profile_name(PlannerProfile p);
std::optional<PlannerProfile> parse_profile(const std::string& name);

// Quintic lateral / quartic longitudinal Frenet candidates over the
// (d_end x v_end x T) grid, in deterministic grid order.
std::vector<Trajectory> generate_candidates(const EgoState& state,
                                            const ReferenceLine& reference,
                                            const SamplingConfig& cfg);

// v in [0, v_max], |a| <= a_max, |kappa| <= kappa_max at every step.
bool feasibility_check(Trajectory& traj, const KinematicLimits& limits);

// J = w_j int jerk^2 + w_v int (v - v_des)^2 + w_d int d^2
//   + w_T * distance(terminal point, goal region).
double base_cost(const Trajectory& traj, const CostWeights& weights,
                 double desired_speed, const Polygon* goal_region = nullptr);

// Max-deceleration stop along the current lateral offset.
Trajectory braking_fallback(const EgoState& state, const ReferenceLine& reference,
                            const SamplingConfig& cfg);

struct CandidateStats {
  int total = 0;
  int feasible = 0;
  int valid = 0;      // candidates confirmed valid before selection stopped
  int selected = -1;  // index in generation order, -1 for the fallback
};

struct PlanResult {
  Trajectory trajectory;
  RiskReport risk;  // full report for the returned trajectory
  CandidateStats stats;
  bool fallback = false;
};

struct PlanEnv {
  const ReferenceLine* reference = nullptr;
  const Polygon* goal_region = nullptr;
  EgoBoxDims ego_box;
  double ego_mass = 1500.0;
};

// Evaluation funnel: generate, kinematic feasibility, base cost, then the
// profile's safety rule over candidates in ascending-J order. risk_aware and
// baseline also reject candidates that sweep through a predicted mean
// position; the aggressive profile does not. Falls back to a braking
// trajectory when nothing passes.
PlanResult plan(const EgoState& state, const PlanEnv& env,
                const PredictionSet& preds, const SamplingConfig& cfg,
                const RiskThresholds& thresholds, const HarmCoeffs& coeffs,
                PlannerProfile profile);

}  // namespace pedplan
