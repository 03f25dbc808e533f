#pragma once

// Portable seeded randomness.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Distributions are implemented here rather than taken from
// <random>, whose algorithms are implementation-defined, so that a seed
// produces the same stream on every platform and standard library:
//   uniform01: top 53 bits of one engine draw, times 2^-53
//   normal:    Box-Muller, both uniforms drawn fresh each call
//   laplace:   inverse CDF of one uniform
// Independent streams are derived with splitmix64(seed, stream id).

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gazekit {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Child stream keyed by `stream`; does not advance this generator.
  static Rng stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  }

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection keeps the result unbiased and platform-independent.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  double normal() {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    const double a = std::max(1e-300, 1.0 - 2.0 * std::abs(u));
    return (u < 0 ? 1.0 : -1.0) * scale * std::log(a);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Isotropic standard normal 3-vector.
  Eigen::Vector3d normal3() {
    const double a = normal();
    const double b = normal();
    const double c = normal();
    return {a, b, c};
  }

  /// Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    Eigen::Vector3d v;
    do {
      v = normal3();
    } while (v.squaredNorm() < 1e-20);
    return v.normalized();
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gazekit
