#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "helpers.hpp"
#include "pedplan/risk.hpp"

using namespace pedplan;

TEST_CASE("bvn cdf spot values") {
  CHECK(bvn_cdf(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-9));
  // Closed form at the origin: 1/4 + asin(rho) / (2 pi).
  for (double rho : {0.5, -0.5, 0.9, -0.9, 0.99, -0.99, 0.9999999}) {
    double expected = 0.25 + std::asin(rho) / (2.0 * kPi);
    CHECK(bvn_cdf(0, 0, rho) == doctest::Approx(expected).epsilon(1e-7));
  }
  CHECK(bvn_cdf(0, 0, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("bvn cdf marginalizes to the 1D normal") {
  double inf = std::numeric_limits<double>::infinity();
  for (double y : {-2.0, -0.5, 0.0, 1.3}) {
    for (double rho : {0.0, 0.6, -0.97}) {
      CHECK(bvn_cdf(inf, y, rho) == doctest::Approx(normal_cdf(y)).epsilon(1e-9));
      CHECK(bvn_cdf(y, inf, rho) == doctest::Approx(normal_cdf(y)).epsilon(1e-9));
    }
  }
  CHECK(bvn_cdf(-inf, 0.3, 0.5) == 0.0);
}

TEST_CASE("bvn cdf respects the reflection identity") {
  // P(X<=x, Y<=y; rho) + P(X<=x, Y<=-y; -rho) = Phi(x).
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  std::uniform_real_distribution<double> corr(-0.999, 0.999);
  for (int i = 0; i < 200; ++i) {
    double x = coord(rng), y = coord(rng), rho = corr(rng);
    double lhs = bvn_cdf(x, y, rho) + bvn_cdf(x, -y, -rho);
    CHECK(lhs == doctest::Approx(normal_cdf(x)).epsilon(1e-7));
  }
}

TEST_CASE("bvn cdf at independent correlation is the product form") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    double x = coord(rng), y = coord(rng);
    CHECK(bvn_cdf(x, y, 0.0) ==
          doctest::Approx(normal_cdf(x) * normal_cdf(y)).epsilon(1e-9));
  }
}

TEST_CASE("centered unit-covariance box probability matches the 1D product") {
  GaussianState g;
  g.mean = {0, 0};
  g.cov = Sym2::diag(1, 1);
  EgoBox box{{0, 0}, 0.0, 1.0, 1.0, 0.0};
  double expected = std::pow(2.0 * normal_cdf(1.0) - 1.0, 2.0);  // 0.466065
  CHECK(collision_probability(g, box) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.466065).epsilon(1e-5));
}

TEST_CASE("far displaced mean has vanishing probability") {
  GaussianState g;
  g.mean = {100.0, 0.0};  // 100 sigma away
  g.cov = Sym2::diag(1, 1);
  EgoBox box{{0, 0}, 0.0, 1.0, 1.0, 0.0};
  CHECK(collision_probability(g, box) < 1e-12);
}

TEST_CASE("rotation invariance of the collision probability") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    GaussianState g;
    g.mean = {2.0 * u(rng), 2.0 * u(rng)};
    double sx = 0.4 + std::abs(u(rng)), sy = 0.4 + std::abs(u(rng));
    double rho = 0.8 * u(rng);
    g.cov = {sx * sx, sy * sy, rho * sx * sy};
    EgoBox box{{0.5 * u(rng), 0.5 * u(rng)}, u(rng), 2.0, 1.0, 0.2};
    double base = collision_probability(g, box);
    double angle = u(rng) * kPi;
    GaussianState g2;
    g2.mean = g.mean.rotated(angle);
    g2.cov = g.cov.rotated(angle);
    EgoBox box2 = box;
    box2.center = box.center.rotated(angle);
    box2.heading = box.heading + angle;
    CHECK(collision_probability(g2, box2) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("inflation never decreases the probability") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    GaussianState g;
    g.mean = {3.0 * u(rng), 3.0 * u(rng)};
    g.cov = Sym2::diag(0.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng)));
    EgoBox box{{0, 0}, u(rng), 2.0, 1.0, 0.0};
    double prev = 0.0;
    for (double inflation : {0.0, 0.2, 0.5, 1.0, 2.0}) {
      box.inflation = inflation;
      double p = collision_probability(g, box);
      CHECK(p >= prev - 1e-12);
      prev = p;
    }
  }
}

TEST_CASE("monte carlo estimator spot cases") {
  GaussianState g;
  g.mean = {1.0, -2.0};
  g.cov = Sym2::diag(0.25, 0.25);
  SUBCASE("box covering 8 sigma catches everything") {
    EgoBox box{{1.0, -2.0}, 0.4, 5.0, 5.0, 0.0};
    CHECK(mc_collision_probability(g, box, 20000, 1) == 1.0);
  }
  SUBCASE("zero-area box catches nothing") {
    EgoBox box{{1.0, -2.0}, 0.0, 0.0, 0.0, 0.0};
    CHECK(mc_collision_probability(g, box, 20000, 1) == 0.0);
  }
  SUBCASE("centered case agrees with the closed form at 3 sigma") {
    GaussianState gc;
    gc.cov = Sym2::diag(1, 1);
    EgoBox box{{0, 0}, 0.0, 1.0, 1.0, 0.0};
    double p = 0.466065;
    double est = mc_collision_probability(gc, box, 1000000, 7);
    double se = std::sqrt(p * (1 - p) / 1e6);
    CHECK(std::abs(est - p) <= 3.0 * se);
  }
}

TEST_CASE("analytic and monte carlo agree on random oriented cases") {
  std::mt19937_64 rng(911);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int n = 25;
  int n_samples = 200000;  // smoke scale; the acceptance suite runs 10^6
  for (int trial = 0; trial < n; ++trial) {
    GaussianState g;
    g.mean = {2.0 * u(rng), 2.0 * u(rng)};
    double sx = 0.3 + std::abs(u(rng)), sy = 0.3 + std::abs(u(rng));
    double rho = 0.9 * u(rng);
    g.cov = {sx * sx, sy * sy, rho * sx * sy};
    EgoBox box{{u(rng), u(rng)}, kPi * u(rng), 0.5 + std::abs(u(rng)) * 2.0,
               0.3 + std::abs(u(rng)), 0.2};
    double p = collision_probability(g, box);
    double est = mc_collision_probability(g, box, n_samples,
                                          static_cast<std::uint64_t>(trial) + 1);
    double se = std::sqrt(std::max(p * (1 - p), 1e-9) / n_samples);
    CHECK(std::abs(est - p) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("near-singular covariance falls back to the 1D treatment") {
  SUBCASE("degenerate x axis") {
    GaussianState g;
    g.mean = {0.0, 0.0};
    g.cov = {1e-15, 1.0, 0.0};
    EgoBox box{{0, 0}, 0.0, 1.0, 1.0, 0.0};
    bool degenerate = false;
    double p = collision_probability(g, box, &degenerate);
    CHECK(degenerate);
    double expected = 2.0 * normal_cdf(1.0) - 1.0;  // 1D mass inside [-1, 1]
    CHECK(p == doctest::Approx(expected).epsilon(1e-9));
  }
  SUBCASE("mean outside the box along the degenerate axis") {
    GaussianState g;
    g.mean = {5.0, 0.0};
    g.cov = {1e-15, 1.0, 0.0};
    EgoBox box{{0, 0}, 0.0, 1.0, 1.0, 0.0};
    CHECK(collision_probability(g, box) == 0.0);
  }
  SUBCASE("fully degenerate point mass") {
    GaussianState g;
    g.mean = {0.2, 0.1};
    g.cov = {0, 0, 0};
    EgoBox box{{0, 0}, 0.0, 1.0, 1.0, 0.0};
    CHECK(collision_probability(g, box) == 1.0);
    g.mean = {3.0, 0.0};
    CHECK(collision_probability(g, box) == 0.0);
  }
  SUBCASE("perfectly correlated line mass") {
    GaussianState g;
    g.mean = {0.0, 0.0};
    double s = 1.0;
    g.cov = {s, s, s};  // rank one, along the diagonal
    EgoBox box{{0, 0}, 0.0, 2.0, 2.0, 0.0};
    bool degenerate = false;
    double p = collision_probability(g, box, &degenerate);
    CHECK(degenerate);
    // The line t * (1,1)/sqrt(2), t ~ N(0, 2), exits the box at |t| = 2*sqrt(2).
    double expected = 2.0 * normal_cdf(2.0) - 1.0;
    CHECK(p == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("delta v") {
  CHECK(delta_v(80, 1500, 3.0, 3.0, 0.0) == 0.0);
  CHECK(delta_v(1000, 1000, 4.0, 4.0, kPi) == doctest::Approx(4.0));
  CHECK(delta_v(1500, 75, 10.0, 0.0, 1.0) == doctest::Approx(75.0 / 1575.0 * 10.0));
  CHECK(delta_v(75, 1500, 0.0, 10.0, 1.0) == doctest::Approx(1500.0 / 1575.0 * 10.0));
  // Radicand clamps at zero for numerically co-moving bodies.
  CHECK(delta_v(1, 1, 2.0, 2.0, 1e-12) == doctest::Approx(0.0));
  CHECK_THROWS_AS(delta_v(0.0, 1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("harm") {
  HarmCoeffs coeffs{6.0, 0.35, 0.8};
  SUBCASE("intercept at zero delta-v") {
    CHECK(harm(0.0, coeffs) ==
          doctest::Approx(1.0 / (1.0 + std::exp(6.0 - 0.8))).epsilon(1e-12));
  }
  SUBCASE("saturates toward 1") {
    CHECK(harm(1000.0, coeffs) == doctest::Approx(1.0));
  }
  SUBCASE("strictly increasing in delta-v") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dv(0.0, 40.0);
    std::uniform_real_distribution<double> eps(1e-6, 2.0);
    for (int i = 0; i < 1000; ++i) {
      double v = dv(rng);
      double e = eps(rng);
      CHECK(harm(v + e, coeffs) > harm(v, coeffs));
    }
  }
  SUBCASE("heavier striker raises the victim harm") {
    double prev = 0.0;
    for (double striker_mass : {500.0, 1000.0, 2000.0, 4000.0}) {
      double dv = delta_v(75.0, striker_mass, 0.0, 8.0, kPi / 2);
      double h = harm(dv, coeffs);
      CHECK(h > prev);
      prev = h;
    }
  }
}

namespace {

Trajectory straight_trajectory(double speed, int steps, double dt = 0.1) {
  Trajectory traj;
  traj.dt = dt;
  traj.horizon = steps * dt;
  traj.feasible = true;
  for (int k = 0; k <= steps; ++k) {
    TrajPoint pt;
    pt.t = k * dt;
    pt.position = {speed * k * dt, 0.0};
    pt.heading = 0.0;
    pt.v = speed;
    traj.points.push_back(pt);
  }
  return traj;
}

}  // namespace

TEST_CASE("assess trajectory") {
  EgoBoxDims dims{2.25, 0.9, 0.3};
  HarmCoeffs coeffs{5.0, 0.85, 0.5};
  RiskThresholds thresholds{0.99, 0.075, 1e-4};

  SUBCASE("no obstacles is trivially valid") {
    Trajectory traj = straight_trajectory(5.0, 30);
    PredictionSet preds;
    preds.dt = 0.1;
    RiskReport report = assess_trajectory(traj, preds, dims, 1500.0, coeffs, thresholds);
    CHECK(report.valid);
    CHECK(report.r_star == 0.0);
    CHECK(report.h_star == 0.0);
    CHECK(report.rows.empty());
  }

  SUBCASE("timestep mismatch is rejected") {
    Trajectory traj = straight_trajectory(5.0, 30, 0.1);
    PredictionSet preds;
    preds.dt = 0.2;
    CHECK_THROWS_AS(
        assess_trajectory(traj, preds, dims, 1500.0, coeffs, thresholds),
        std::invalid_argument);
  }

  SUBCASE("near-delta pedestrian on the path collapses to p=1 risk") {
    Trajectory traj = straight_trajectory(5.0, 30);
    PredictionSet preds;
    preds.dt = 0.1;
    AgentPrediction agent;
    agent.id = 1;
    agent.mass = 75.0;
    agent.velocity = {0, 0};
    for (int k = 0; k <= 30; ++k) {
      // Standing exactly where the ego is at k=10.
      agent.states.push_back({k * 0.1, {5.0, 0.0}, Sym2::diag(1e-8, 1e-8)});
    }
    preds.agents.push_back(agent);
    RiskReport report = assess_trajectory(traj, preds, dims, 1500.0, coeffs, thresholds);
    double dv = delta_v(75.0, 1500.0, 0.0, 5.0, 0.0);
    double expected_h = harm(dv, coeffs);
    CHECK(report.r_star == doctest::Approx(expected_h).epsilon(1e-6));
    CHECK(report.h_star == doctest::Approx(expected_h).epsilon(1e-6));
    CHECK(report.valid == (expected_h < 0.075));
    CHECK_FALSE(report.rows.empty());
  }

  SUBCASE("adding an obstacle never decreases the maximin risk") {
    Trajectory traj = straight_trajectory(5.0, 30);
    PredictionSet preds;
    preds.dt = 0.1;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double prev = 0.0;
    for (int n = 0; n < 8; ++n) {
      AgentPrediction agent;
      agent.id = static_cast<std::uint32_t>(n);
      agent.mass = 75.0;
      agent.velocity = {u(rng) - 0.5, u(rng) - 0.5};
      Vec2 start{u(rng) * 15.0, (u(rng) - 0.5) * 4.0};
      for (int k = 0; k <= 30; ++k) {
        agent.states.push_back({k * 0.1, start + agent.velocity * (k * 0.1),
                                Sym2::diag(0.05 + 0.1 * k * 0.1, 0.05 + 0.1 * k * 0.1)});
      }
      preds.agents.push_back(agent);
      RiskReport report =
          assess_trajectory(traj, preds, dims, 1500.0, coeffs, thresholds);
      CHECK(report.r_star >= prev - 1e-12);
      prev = report.r_star;
    }
  }

  SUBCASE("probability bounds hold row by row") {
    Trajectory traj = straight_trajectory(4.0, 30);
    PredictionSet preds;
    preds.dt = 0.1;
    AgentPrediction agent;
    agent.id = 9;
    agent.mass = 75.0;
    agent.velocity = {-1.0, 0.3};
    for (int k = 0; k <= 30; ++k) {
      agent.states.push_back({k * 0.1,
                              Vec2{8.0, -1.0} + agent.velocity * (k * 0.1),
                              Sym2::diag(0.1 + 0.02 * k, 0.1 + 0.02 * k)});
    }
    preds.agents.push_back(agent);
    RiskReport report = assess_trajectory(traj, preds, dims, 1500.0, coeffs, thresholds);
    for (const RiskRow& row : report.rows) {
      CHECK(row.p >= 0.0);
      CHECK(row.p <= 1.0);
      CHECK(row.h > 0.0);
      CHECK(row.h < 1.0);
      CHECK(row.r == doctest::Approx(row.p * row.h));
      CHECK(row.r <= std::min(row.p, row.h) + 1e-12);
    }
  }
}
