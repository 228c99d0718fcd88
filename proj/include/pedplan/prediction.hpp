#pragma once

#include <cstdint>
#include <vector>

#include "pedplan/pedestrian.hpp"
#include "pedplan/scenario.hpp"

namespace pedplan {

// Symmetric 2x2 covariance.
struct Sym2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  static Sym2 diag(double a, double b) { return {a, b, 0.0}; }
  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy}; }
  Sym2 operator*(double s) const { return {xx * s, yy * s, xy * s}; }
  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
  bool psd() const { return xx >= 0.0 && yy >= 0.0 && det() >= -1e-12; }
  // R(theta) * S * R(theta)^T
  Sym2 rotated(double theta) const {
    double c = std::cos(theta), s = std::sin(theta);
    return {c * c * xx - 2.0 * c * s * xy + s * s * yy,
            s * s * xx + 2.0 * c * s * xy + c * c * yy,
            c * s * (xx - yy) + (c * c - s * s) * xy};
  }
};

struct GaussianState {
  double t = 0.0;
  Vec2 mean;
  Sym2 cov;
};

enum class AgentKind { pedestrian, vehicle };

struct AgentPrediction {
  std::uint32_t id = 0;
  AgentKind kind = AgentKind::pedestrian;
  double mass = 75.0;
  Vec2 velocity;  // constant-velocity assumption over the horizon
  std::vector<GaussianState> states;  // steps 0..K at spacing dt
};

struct PredictionSet {
  double dt = 0.1;
  std::vector<AgentPrediction> agents;
};

// Constant-velocity forecast with linearly growing covariance
// Sigma(k dt) = sigma0 + k dt * q.
std::vector<GaussianState> predict_pedestrian(const Pedestrian& ped,
                                              double horizon, double dt,
                                              Sym2 q,
                                              Sym2 sigma0 = Sym2::diag(0.0025,
                                                                       0.0025));

// One polyline per followable lane branch, arc length speed * horizon,
// starting at the vehicle position. Unmatched vehicles get a straight-ahead
// polyline and set *unmatched.
std::vector<std::vector<Vec2>> predict_vehicle_paths(
    Vec2 position, double heading, double speed,
    std::span<const Lane> lanes, double horizon, bool* unmatched = nullptr);

// Constant-velocity Gaussian forecast along the heading with anisotropic
// growth (q_long along the heading, q_lat across it).
std::vector<GaussianState> predict_vehicle_gaussian(
    Vec2 position, double heading, double speed, double horizon, double dt,
    double q_long, double q_lat, Sym2 sigma0 = Sym2::diag(0.01, 0.01));

// Index of the lane the vehicle is on (position within width/2 + slack and
// heading aligned), -1 when none.
int match_lane(Vec2 position, double heading, std::span<const Lane> lanes);

}  // namespace pedplan
