#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pedplan {

// Seeded sampling helpers. std::mt19937_64 output is fully specified by the
// standard; the std::*_distribution adapters are not, so the scalar
// transformations are done by hand to keep seeded runs replayable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call (two engine draws).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPiLocal * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

  // Geometric on {1, 2, ...} with the given mean (>= 1).
  int geometric_from_one(double mean) {
    double p = 1.0 / (mean < 1.0 ? 1.0 : mean);
    if (p >= 1.0) return 1;
    double u = 1.0 - uniform();  // (0, 1]
    return 1 + static_cast<int>(std::floor(std::log(u) / std::log1p(-p)));
  }

 private:
  static constexpr double kPiLocal = 3.14159265358979323846;
  std::mt19937_64 engine_;
};

// Stateless mix for deriving independent stream seeds (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pedplan
