#include "pedplan/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pedplan/rng.hpp"

namespace pedplan {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// 20-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlx[20] = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
    -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
    -0.5108670019508271, -0.3737060887154195, -0.2277858511416451,
    -0.0765265211334973, 0.0765265211334973,  0.2277858511416451,
    0.3737060887154195,  0.5108670019508271,  0.6360536807265150,
    0.7463319064601508,  0.8391169718222188,  0.9122344282513259,
    0.9639719272779138,  0.9931285991850949};
constexpr double kGlw[20] = {
    0.0176140071391521, 0.0406014298003869, 0.0626720483341091,
    0.0832767415767048, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183820, 0.1491729864726037,
    0.1527533871307258, 0.1527533871307258, 0.1491729864726037,
    0.1420961093183820, 0.1316886384491766, 0.1181945319615184,
    0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
    0.0406014298003869, 0.0176140071391521};

template <typename F>
double gl20(F&& f, double a, double b) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 20; ++i) sum += kGlw[i] * f(mid + half * kGlx[i]);
  return sum * half;
}

}  // namespace

double bvn_cdf(double x, double y, double rho) {
  if (std::isnan(x) || std::isnan(y)) return std::numeric_limits<double>::quiet_NaN();
  if (x == std::numeric_limits<double>::infinity()) return normal_cdf(y);
  if (y == std::numeric_limits<double>::infinity()) return normal_cdf(x);
  if (x == -std::numeric_limits<double>::infinity() ||
      y == -std::numeric_limits<double>::infinity()) {
    return 0.0;
  }
  rho = std::clamp(rho, -(1.0 - 1e-12), 1.0 - 1e-12);
  double base = normal_cdf(x) * normal_cdf(y);
  if (std::abs(rho) < 1e-15) return base;

  // d/drho Phi2 = pdf, integrated with t = sin(theta):
  // Phi2 = Phi(x)Phi(y) + (1/2pi) int_0^{asin rho}
  //        exp(-(x^2 + y^2 - 2 x y sin t) / (2 cos^2 t)) dt
  auto integrand = [x, y](double theta) {
    double s = std::sin(theta);
    double c = std::cos(theta);
    double c2 = c * c;
    return std::exp(-(x * x + y * y - 2.0 * x * y * s) / (2.0 * c2));
  };
  double asr = std::asin(rho);
  double integral;
  if (std::abs(rho) <= 0.925) {
    integral = gl20(integrand, 0.0, asr);
  } else {
    // The integrand develops a boundary layer at theta -> +-pi/2; geometric
    // panel grading toward the endpoint resolves every scale.
    integral = 0.0;
    double prev = 0.0;
    for (int k = 1; k <= 44; ++k) {
      double bp = (k < 44) ? asr * (1.0 - std::ldexp(1.0, -k)) : asr;
      integral += gl20(integrand, prev, bp);
      prev = bp;
    }
  }
  double p = base + integral / (2.0 * kPi);
  return std::clamp(p, 0.0, 1.0);
}

namespace {

struct BoxFrame {
  Vec2 mu;      // mean in the box frame, relative to the box center
  Sym2 cov;     // covariance in the box frame
  double hl;    // inflated half extents
  double hw;
};

BoxFrame to_box_frame(const GaussianState& g, const EgoBox& box) {
  BoxFrame f;
  f.mu = (g.mean - box.center).rotated(-box.heading);
  f.cov = g.cov.rotated(-box.heading);
  f.hl = box.half_length + box.inflation;
  f.hw = box.half_width + box.inflation;
  return f;
}

// Mass of a 1D Gaussian along the dominant axis that falls inside the box.
double degenerate_probability(const BoxFrame& f) {
  double tr = f.cov.trace();
  double det = f.cov.det();
  double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  double lmax = 0.5 * (tr + disc);
  if (lmax < 1e-12) {
    return (std::abs(f.mu.x) <= f.hl && std::abs(f.mu.y) <= f.hw) ? 1.0 : 0.0;
  }
  Vec2 axis;
  if (std::abs(f.cov.xy) > 1e-15) {
    axis = Vec2{lmax - f.cov.yy, f.cov.xy}.normalized();
  } else {
    axis = f.cov.xx >= f.cov.yy ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
  }
  // Clip mu + t * axis against the box.
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  auto clip = [&](double dir, double lo, double hi) -> bool {
    if (std::abs(dir) < 1e-15) return lo <= 0.0 && 0.0 <= hi;
    double ta = lo / dir, tb = hi / dir;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return true;
  };
  if (!clip(axis.x, -f.hl - f.mu.x, f.hl - f.mu.x)) return 0.0;
  if (!clip(axis.y, -f.hw - f.mu.y, f.hw - f.mu.y)) return 0.0;
  if (t0 > t1) return 0.0;
  double sigma = std::sqrt(lmax);
  return std::clamp(normal_cdf(t1 / sigma) - normal_cdf(t0 / sigma), 0.0, 1.0);
}

}  // namespace

double collision_probability(const GaussianState& g, const EgoBox& box,
                             bool* degenerate) {
  BoxFrame f = to_box_frame(g, box);
  if (f.cov.det() < 1e-12) {
    if (degenerate) *degenerate = true;
    return degenerate_probability(f);
  }
  double sx = std::sqrt(f.cov.xx);
  double sy = std::sqrt(f.cov.yy);
  double rho = std::clamp(f.cov.xy / (sx * sy), -(1.0 - 1e-12), 1.0 - 1e-12);
  double a = (-f.hl - f.mu.x) / sx;
  double b = (f.hl - f.mu.x) / sx;
  double c = (-f.hw - f.mu.y) / sy;
  double d = (f.hw - f.mu.y) / sy;
  double p = bvn_cdf(b, d, rho) - bvn_cdf(a, d, rho) - bvn_cdf(b, c, rho) +
             bvn_cdf(a, c, rho);
  return std::clamp(p, 0.0, 1.0);
}

double mc_collision_probability(const GaussianState& g, const EgoBox& box,
                                int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("mc_collision_probability: N >= 1");
  // Cholesky factor of the covariance (clamped for near-degenerate input).
  double l11 = std::sqrt(std::max(g.cov.xx, 0.0));
  double l21 = l11 > 1e-15 ? g.cov.xy / l11 : 0.0;
  double l22 = std::sqrt(std::max(g.cov.yy - l21 * l21, 0.0));
  double hl = box.half_length + box.inflation;
  double hw = box.half_width + box.inflation;
  double ch = std::cos(box.heading), sh = std::sin(box.heading);
  Rng rng(seed);
  long hits = 0;
  for (int i = 0; i < n_samples; ++i) {
    double z1 = rng.normal();
    double z2 = rng.normal();
    double px = g.mean.x + l11 * z1;
    double py = g.mean.y + l21 * z1 + l22 * z2;
    double rx = px - box.center.x;
    double ry = py - box.center.y;
    double lx = ch * rx + sh * ry;
    double ly = -sh * rx + ch * ry;
    if (std::abs(lx) <= hl && std::abs(ly) <= hw) ++hits;
  }
  return static_cast<double>(hits) / n_samples;
}

double delta_v(double mass_a, double mass_b, double v_a, double v_b,
               double alpha) {
  if (mass_a <= 0.0 || mass_b <= 0.0) {
    throw std::invalid_argument("delta_v: masses must be positive");
  }
  double radicand = v_a * v_a + v_b * v_b - 2.0 * v_a * v_b * std::cos(alpha);
  return mass_b / (mass_a + mass_b) * std::sqrt(std::max(0.0, radicand));
}

double harm(double dv, const HarmCoeffs& coeffs) {
  return 1.0 / (1.0 + std::exp(coeffs.c0 - coeffs.c1 * dv - coeffs.c_area));
}

RiskReport assess_trajectory(const Trajectory& traj, const PredictionSet& preds,
                             const EgoBoxDims& dims, double ego_mass,
                             const HarmCoeffs& coeffs,
                             const RiskThresholds& thresholds,
                             AssessMode mode) {
  if (std::abs(traj.dt - preds.dt) > 1e-9) {
    throw std::invalid_argument("assess_trajectory: timestep mismatch");
  }
  RiskReport report;
  double half_diag = std::hypot(dims.half_length + dims.inflation,
                                dims.half_width + dims.inflation);
  for (const AgentPrediction& agent : preds.agents) {
    size_t steps = std::min(traj.points.size(), agent.states.size());
    double obstacle_speed = agent.velocity.norm();
    for (size_t k = 0; k < steps; ++k) {
      const TrajPoint& pt = traj.points[k];
      const GaussianState& gs = agent.states[k];
      // Distant obstacle-steps contribute numerically nothing.
      double reach = half_diag + 6.0 * std::sqrt(std::max(gs.cov.trace(), 0.0)) + 0.1;
      if ((gs.mean - pt.position).norm_sq() > reach * reach) continue;

      EgoBox box{pt.position, pt.heading, dims.half_length, dims.half_width,
                 dims.inflation};
      double p = collision_probability(gs, box);
      double ego_speed = std::abs(pt.v);
      double alpha = 0.0;
      if (ego_speed > 1e-9 && obstacle_speed > 1e-9) {
        Vec2 ego_dir{std::cos(pt.heading), std::sin(pt.heading)};
        double cosa = std::clamp(ego_dir.dot(agent.velocity) / obstacle_speed, -1.0, 1.0);
        alpha = std::acos(cosa);
      }
      // The obstacle is the struck body.
      double dv = delta_v(agent.mass, ego_mass, obstacle_speed, ego_speed, alpha);
      double h = harm(dv, coeffs);
      double r = p * h;
      if (p > thresholds.p_gate) report.h_star = std::max(report.h_star, h);
      report.r_star = std::max(report.r_star, r);
      if (mode == AssessMode::full && p > 1e-12) {
        report.rows.push_back({static_cast<int>(k), agent.id, p, h, r});
      }
      if (mode == AssessMode::validate &&
          (report.h_star >= thresholds.h_max || report.r_star >= thresholds.r_max)) {
        report.valid = false;
        return report;
      }
    }
  }
  report.valid = report.h_star < thresholds.h_max && report.r_star < thresholds.r_max;
  return report;
}

}  // namespace pedplan
