#pragma once

// Ground-truth labelling from rig detections: eye position from body-keypoint
// rays plus a known camera height, target position from a fiducial board pose.

#include <optional>
#include <string>

#include "gazekit/geometry.hpp"

namespace gazekit {

/// Direction of the world-frame ray through a detected pixel.
struct PixelRay {
  UnitVec3d direction;
};

struct SubjectDetection {
  PixelRay eye_ray;
  std::optional<PixelRay> feet_ray;
  std::optional<PixelRay> hip_ray;
  int subject_id = 0;
};

/// Board-to-world pose of a detected fiducial marker.
struct MarkerObservation {
  Mat3d rotation = Mat3d::Identity();
  Vec3d translation = Vec3d::Zero();
};

struct BoardGeometry {
  /// Fixation cross relative to the tag origin, board frame, meters.
  Vec3d cross_offset = Vec3d(0.0, -0.2, 0.0);
};

struct BodyRatios {
  double eye_height_ratio = 0.936;
  double hip_height_ratio = 0.530;
};

struct RigConfig {
  double camera_height = 1.6;
  BodyRatios body_ratios;

  void validate() const;
};

struct GazeLabel {
  Vec3d eye;
  Vec3d target;
  UnitVec3d gaze;
  Gaze spherical;
};

Vec3d recover_eye_position(const SubjectDetection& det, const RigConfig& rig);

Vec3d cross_position(const MarkerObservation& marker, const BoardGeometry& board);

GazeLabel label_gaze(const SubjectDetection& det, const MarkerObservation& marker,
                     const BoardGeometry& board, const RigConfig& rig);

/// Elevation of a direction above the horizontal plane, radians.
double elevation(const Vec3d& direction);

}  // namespace gazekit
