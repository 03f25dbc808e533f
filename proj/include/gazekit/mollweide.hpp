#pragma once

// Equal-area Mollweide projection of (yaw, pitch) onto the plane.
//
// The full sphere maps onto the ellipse x^2/8 + y^2/2 <= 1, whose area 4*pi
// equals the sphere's, with yaw along x and pitch along y.

#include "gazekit/geometry.hpp"

namespace gazekit {

struct MollweidePoint {
  double x = 0;
  double y = 0;
};

inline constexpr double kMollweideHalfWidth = 2.8284271247461903;   // 2*sqrt(2)
inline constexpr double kMollweideHalfHeight = 1.4142135623730951;  // sqrt(2)

/// Auxiliary angle alpha with 2a + sin 2a = pi sin(pitch). Newton iteration
/// to |step| <= 1e-10 in at most 50 iterations; exact at the poles.
double mollweide_auxiliary(double pitch);

/// yaw in [-pi, pi], pitch in [-pi/2, pi/2]; anything else is a ConfigError.
MollweidePoint mollweide_project(double yaw, double pitch);

inline MollweidePoint mollweide_project(const Gaze& g) { return mollweide_project(g.yaw, g.pitch); }

}  // namespace gazekit
