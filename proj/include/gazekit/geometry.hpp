#pragma once

// Coordinate frames and gaze-direction math.
//
// World frame L: the camera rig frame, origin at the camera, third axis up.
// Eye frame E: anchored at the eye midpoint, Ez along the camera-to-eye ray,
// Ex horizontal (no roll). Looking straight at the camera gives g = (0,0,-1).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "gazekit/error.hpp"

namespace gazekit {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
inline Vec3<Scalar> world_up() {
  return Vec3<Scalar>::UnitZ();
}

/// Unit-norm direction. Construction normalizes; the raw constructor is only
/// for values already known to be unit length.
template <typename Scalar>
class UnitVec3 {
 public:
  UnitVec3() : v_(Vec3<Scalar>(0, 0, -1)) {}

  static UnitVec3 normalized(const Vec3<Scalar>& v) { return UnitVec3(v.normalized()); }
  static UnitVec3 from_unit(const Vec3<Scalar>& v) { return UnitVec3(v); }

  const Vec3<Scalar>& vec() const { return v_; }
  Scalar x() const { return v_.x(); }
  Scalar y() const { return v_.y(); }
  Scalar z() const { return v_.z(); }
  UnitVec3 operator-() const { return UnitVec3(-v_); }

 private:
  explicit UnitVec3(const Vec3<Scalar>& v) : v_(v) {}
  Vec3<Scalar> v_;
};

/// Rows of `basis` are Ex, Ey, Ez expressed in the world frame.
template <typename Scalar>
struct EyeFrame {
  Vec3<Scalar> origin;
  Mat3<Scalar> basis;

  Vec3<Scalar> ex() const { return basis.row(0).transpose(); }
  Vec3<Scalar> ey() const { return basis.row(1).transpose(); }
  Vec3<Scalar> ez() const { return basis.row(2).transpose(); }
};

/// Yaw in (-pi, pi], pitch in [-pi/2, pi/2]. sigma is the symmetric quantile
/// offset when the value is a prediction from a quantile model.
template <typename Scalar>
struct SphericalGaze {
  Scalar yaw = 0;
  Scalar pitch = 0;
  std::optional<Scalar> sigma;
};

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
inline Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  constexpr Scalar two_pi = 2 * pi;
  a = std::fmod(a, two_pi);
  if (a <= -pi) a += two_pi;
  if (a > pi) a -= two_pi;
  return a;
}

template <typename Scalar>
inline Scalar deg2rad(Scalar d) {
  return d * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
inline Scalar rad2deg(Scalar r) {
  return r * Scalar(180) / std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
EyeFrame<Scalar> build_eye_frame(const Vec3<Scalar>& eye) {
  const Scalar horizontal = std::hypot(eye.x(), eye.y());
  if (!(horizontal > Scalar(1e-6))) {
    throw Error(ErrorCode::DegenerateEyePosition,
                "eye lies on the vertical axis through the camera");
  }
  const Vec3<Scalar> ez = eye.normalized();
  const Vec3<Scalar> ex = world_up<Scalar>().cross(ez).normalized();
  const Vec3<Scalar> ey = ez.cross(ex);
  EyeFrame<Scalar> frame;
  frame.origin = eye;
  frame.basis.row(0) = ex.transpose();
  frame.basis.row(1) = ey.transpose();
  frame.basis.row(2) = ez.transpose();
  return frame;
}

/// Unit gaze from `eye` toward `target`, expressed in the eye frame.
template <typename Scalar>
UnitVec3<Scalar> gaze_in_eye_coords(const Vec3<Scalar>& target, const Vec3<Scalar>& eye) {
  const Vec3<Scalar> gl = target - eye;
  const Scalar n = gl.norm();
  if (!(n > Scalar(1e-6))) {
    throw Error(ErrorCode::CoincidentTargetAndEye, "target coincides with eye");
  }
  const EyeFrame<Scalar> frame = build_eye_frame(eye);
  return UnitVec3<Scalar>::normalized(frame.basis * (gl / n));
}

/// Eye-frame gaze direction back to a world-frame direction.
template <typename Scalar>
Vec3<Scalar> eye_to_world(const EyeFrame<Scalar>& frame, const UnitVec3<Scalar>& g) {
  return frame.basis.transpose() * g.vec();
}

template <typename Scalar>
SphericalGaze<Scalar> to_spherical(const UnitVec3<Scalar>& g) {
  SphericalGaze<Scalar> s;
  s.pitch = std::asin(std::clamp(g.y(), Scalar(-1), Scalar(1)));
  // Yaw is undefined at the poles; pin it to zero.
  if (std::hypot(g.x(), g.z()) < Scalar(1e-12)) {
    s.yaw = 0;
  } else {
    s.yaw = std::atan2(g.x(), -g.z());
    if (s.yaw <= -std::numbers::pi_v<Scalar>) s.yaw = std::numbers::pi_v<Scalar>;
  }
  return s;
}

template <typename Scalar>
UnitVec3<Scalar> from_spherical(const SphericalGaze<Scalar>& s) {
  const Scalar cp = std::cos(s.pitch);
  return UnitVec3<Scalar>::normalized(
      Vec3<Scalar>(cp * std::sin(s.yaw), std::sin(s.pitch), -cp * std::cos(s.yaw)));
}

/// Angle between two unit directions, degrees in [0, 180].
template <typename Scalar>
Scalar angular_error(const UnitVec3<Scalar>& a, const UnitVec3<Scalar>& b) {
  // atan2 form of arccos(a.b); accurate near 0 and 180 degrees.
  return rad2deg(std::atan2(a.vec().cross(b.vec()).norm(), a.vec().dot(b.vec())));
}

template <typename Scalar>
Scalar angular_error(const SphericalGaze<Scalar>& a, const SphericalGaze<Scalar>& b) {
  return angular_error(from_spherical(a), from_spherical(b));
}

/// Horizontal mirror: yaw flips, pitch and sigma are kept.
template <typename Scalar>
SphericalGaze<Scalar> mirror_gaze(const SphericalGaze<Scalar>& s) {
  SphericalGaze<Scalar> m = s;
  m.yaw = s.yaw == std::numbers::pi_v<Scalar> ? s.yaw : -s.yaw;
  return m;
}

/// Rotation by `angle` radians about the world vertical.
template <typename Scalar>
Mat3<Scalar> rotation_about_up(Scalar angle) {
  return Eigen::AngleAxis<Scalar>(angle, world_up<Scalar>()).toRotationMatrix();
}

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using UnitVec3d = UnitVec3<double>;
using EyeFramed = EyeFrame<double>;
using Gaze = SphericalGaze<double>;

}  // namespace gazekit
