#pragma once

#include <cstdint>
#include <vector>

#include "pedplan/prediction.hpp"
#include "pedplan/trajectory.hpp"

namespace pedplan {

struct EgoBox {
  Vec2 center;
  double heading = 0.0;
  double half_length = 2.25;
  double half_width = 0.9;
  double inflation = 0.0;  // margin added on every side
};

struct HarmCoeffs {
  double c0 = 6.0;
  double c1 = 0.35;
  double c_area = 0.8;
};

struct RiskThresholds {
  double h_max = 0.99;
  double r_max = 0.075;
  double p_gate = 1e-4;  // H contributes to H* only where p exceeds this
};

double normal_cdf(double z);

// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
// Gauss-Legendre quadrature of the single-integral reduction; graded panels
// keep the absolute error below 1e-7 even for |rho| near 1.
double bvn_cdf(double x, double y, double rho);

// Probability mass of the Gaussian inside the inflated oriented box, by the
// four-corner CDF identity in the box frame. Near-singular covariance
// (det < 1e-12) collapses to a 1D treatment along the dominant axis and sets
// *degenerate.
double collision_probability(const GaussianState& g, const EgoBox& box,
                             bool* degenerate = nullptr);

// Monte Carlo estimate: fraction of N Gaussian samples inside the box.
double mc_collision_probability(const GaussianState& g, const EgoBox& box,
                                int n_samples, std::uint64_t seed);

// Mass-weighted closing-speed change for body A colliding with body B at
// approach angle alpha.
double delta_v(double mass_a, double mass_b, double v_a, double v_b,
               double alpha);

// Logistic severe-injury probability.
double harm(double dv, const HarmCoeffs& coeffs);

struct RiskRow {
  int step = 0;
  std::uint32_t obstacle_id = 0;
  double p = 0.0;
  double h = 0.0;
  double r = 0.0;
};

struct RiskReport {
  double h_star = 0.0;  // max harm over steps/obstacles gated by p > p_gate
  double r_star = 0.0;  // max risk over steps/obstacles
  bool valid = true;
  std::vector<RiskRow> rows;  // only in full mode, rows with p > 1e-12
};

struct EgoBoxDims {
  double half_length = 2.25;
  double half_width = 0.9;
  double inflation = 0.0;
};

enum class AssessMode {
  validate,  // stop at the first threshold violation, no rows
  full,      // evaluate everything and collect rows
};

// Maximin evaluation of a trajectory against every predicted obstacle. Harm
// is taken from the struck obstacle's perspective (obstacle as body A).
// Throws std::invalid_argument when the timestep grids differ.
RiskReport assess_trajectory(const Trajectory& traj, const PredictionSet& preds,
                             const EgoBoxDims& dims, double ego_mass,
                             const HarmCoeffs& coeffs,
                             const RiskThresholds& thresholds,
                             AssessMode mode = AssessMode::full);

}  // namespace pedplan
