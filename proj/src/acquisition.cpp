#include "gazekit/acquisition.hpp"

#include <cmath>

namespace gazekit {

namespace {

double horizontal_norm(const Vec3d& v) { return std::hypot(v.x(), v.y()); }

// Point on the eye ray at horizontal distance `rho` from the camera axis.
Vec3d eye_at_horizontal_distance(const Vec3d& eye_dir, double rho) {
  const double h = horizontal_norm(eye_dir);
  if (!(h > 1e-12)) {
    throw Error(ErrorCode::DegenerateEyePosition, "eye ray is vertical");
  }
  return eye_dir * (rho / h);
}

}  // namespace

void RigConfig::validate() const {
  if (!(camera_height > 0)) {
    throw Error(ErrorCode::ConfigError, "camera_height must be positive");
  }
  const auto& r = body_ratios;
  if (!(r.eye_height_ratio > 0 && r.eye_height_ratio < 1 && r.hip_height_ratio > 0 &&
        r.hip_height_ratio < 1 && r.eye_height_ratio > r.hip_height_ratio)) {
    throw Error(ErrorCode::ConfigError, "body ratios must satisfy 0 < hip < eye < 1");
  }
}

double elevation(const Vec3d& direction) {
  return std::atan2(direction.z(), horizontal_norm(direction));
}

Vec3d recover_eye_position(const SubjectDetection& det, const RigConfig& rig) {
  const Vec3d& eye_dir = det.eye_ray.direction.vec();
  if (!eye_dir.allFinite()) {
    throw Error(ErrorCode::DegenerateEyePosition, "eye ray is not finite");
  }
  const double ch = rig.camera_height;

  if (det.feet_ray) {
    // Feet ray meets the ground at z = -camera_height; the eye sits on the
    // vertical line through that ground point.
    const Vec3d& f = det.feet_ray->direction.vec();
    const double down = -f.z();
    if (!(down > 1e-12)) {
      throw Error(ErrorCode::RayAboveHorizon, "feet ray does not meet the ground");
    }
    const double rho = ch * horizontal_norm(f) / down;
    return eye_at_horizontal_distance(eye_dir, rho);
  }

  if (det.hip_ray) {
    // Stature H is unknown. With eye and hip on one vertical line at
    // horizontal distance rho:
    //   rho*tan(el_eye) + ch = eye_ratio*H,  rho*tan(el_hip) + ch = hip_ratio*H.
    const Vec3d& h = det.hip_ray->direction.vec();
    const double hn = horizontal_norm(h);
    const double en = horizontal_norm(eye_dir);
    if (!(hn > 1e-12) || !(en > 1e-12)) {
      throw Error(ErrorCode::RayAboveHorizon, "hip or eye ray is vertical");
    }
    const double tan_eye = eye_dir.z() / en;
    const double tan_hip = h.z() / hn;
    const double re = rig.body_ratios.eye_height_ratio;
    const double rh = rig.body_ratios.hip_height_ratio;
    const double denom = tan_eye * rh - tan_hip * re;
    if (!(denom > 1e-12)) {
      throw Error(ErrorCode::RayAboveHorizon, "hip ray does not fix a subject distance");
    }
    const double rho = ch * (re - rh) / denom;
    return eye_at_horizontal_distance(eye_dir, rho);
  }

  throw Error(ErrorCode::NoBodyRay, "detection has neither feet nor hip ray");
}

Vec3d cross_position(const MarkerObservation& marker, const BoardGeometry& board) {
  return marker.rotation * board.cross_offset + marker.translation;
}

GazeLabel label_gaze(const SubjectDetection& det, const MarkerObservation& marker,
                     const BoardGeometry& board, const RigConfig& rig) {
  GazeLabel label;
  label.eye = recover_eye_position(det, rig);
  label.target = cross_position(marker, board);
  label.gaze = gaze_in_eye_coords(label.target, label.eye);
  label.spherical = to_spherical(label.gaze);
  return label;
}

}  // namespace gazekit
