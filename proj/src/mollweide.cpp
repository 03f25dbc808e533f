#include "gazekit/mollweide.hpp"

#include <cmath>
#include <numbers>

namespace gazekit {

double mollweide_auxiliary(double pitch) {
  constexpr double pi = std::numbers::pi;
  if (pitch >= pi / 2) return pi / 2;
  if (pitch <= -pi / 2) return -pi / 2;
  const double target = pi * std::sin(pitch);
  // Near a pole f'(a) vanishes and plain Newton slows to a linear crawl. The
  // cubic expansion 2a + sin 2a ~ pi - (4/3) e^3, with e = pi/2 - |a|, gives a
  // starting point already inside the quadratic basin.
  double a = pitch;
  if (std::abs(pitch) > 1.3) {
    const double e = std::cbrt(0.75 * pi * (1.0 - std::sin(std::abs(pitch))));
    a = std::copysign(pi / 2 - e, pitch);
  }
  for (int it = 0; it < 50; ++it) {
    const double f = 2 * a + std::sin(2 * a) - target;
    const double df = 2 + 2 * std::cos(2 * a);
    if (df == 0) return a;
    const double step = f / df;
    a -= step;
    if (std::abs(step) <= 1e-10) return a;
  }
  throw Error(ErrorCode::NoConvergence, "Mollweide auxiliary angle did not converge");
}

MollweidePoint mollweide_project(double yaw, double pitch) {
  constexpr double pi = std::numbers::pi;
  if (!(std::abs(yaw) <= pi) || !(std::abs(pitch) <= pi / 2)) {
    throw Error(ErrorCode::ConfigError, "angle out of range for the Mollweide projection");
  }
  const double a = mollweide_auxiliary(pitch);
  return {kMollweideHalfWidth / pi * yaw * std::cos(a), kMollweideHalfHeight * std::sin(a)};
}

}  // namespace gazekit
