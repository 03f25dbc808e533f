#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gazekit/acquisition.hpp"
#include "gazekit/rng.hpp"
#include "gazekit/simulator.hpp"

using namespace gazekit;

namespace {

constexpr double kPi = std::numbers::pi;

PixelRay ray_to(const Vec3d& p) { return {UnitVec3d::normalized(p)}; }

PixelRay ray_at(double azimuth, double elevation_rad) {
  return {UnitVec3d::from_unit(Vec3d(std::cos(elevation_rad) * std::cos(azimuth),
                                     std::cos(elevation_rad) * std::sin(azimuth), std::sin(elevation_rad)))};
}

// Independent construction: intersect the feet ray with the ground plane,
// then walk the eye ray until its horizontal distance matches.
Vec3d oracle_eye(const Vec3d& eye_dir, const Vec3d& feet_dir, double ch) {
  const double t = -ch / feet_dir.z();
  const Vec3d ground = t * feet_dir;
  const Eigen::Vector2d gh = ground.head<2>();
  const Eigen::Vector2d eh = eye_dir.head<2>();
  const double s = eh.dot(gh) / eh.squaredNorm();
  return s * eye_dir;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::ConfigError;
}

}  // namespace

TEST_CASE("feet ray at 45 degrees below the horizon") {
  RigConfig rig;
  rig.camera_height = 1.5;
  SubjectDetection det;
  det.eye_ray = ray_at(0.0, 0.0);
  det.feet_ray = ray_at(0.0, -kPi / 4);
  const Vec3d e = recover_eye_position(det, rig);
  CHECK(e.x() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std::abs(e.y()) < 1e-12);
  // Eye height equals the camera height: zero in camera-relative coordinates.
  CHECK(std::abs(e.z()) < 1e-12);
  CHECK(e.norm() == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("eye recovery agrees with a line-plane intersection oracle") {
  Rng rng(3);
  RigConfig rig;
  for (int i = 0; i < 500; ++i) {
    const double az = rng.uniform(-kPi, kPi);
    const double d = rng.uniform(1.0, 6.0);
    const Vec3d eye(d * std::cos(az), d * std::sin(az), rng.uniform(-0.3, 0.3));
    const Vec3d feet(eye.x(), eye.y(), -rig.camera_height);
    SubjectDetection det;
    det.eye_ray = ray_to(eye);
    det.feet_ray = ray_to(feet);
    const Vec3d got = recover_eye_position(det, rig);
    CHECK((got - oracle_eye(det.eye_ray.direction.vec(), det.feet_ray->direction.vec(), rig.camera_height)).norm() <
          1e-9);
    CHECK((got - eye).norm() < 1e-9);
  }
}

TEST_CASE("hip fallback recovers the eye from body proportions") {
  RigConfig rig;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const double stature = rng.uniform(1.5, 1.95);
    const double az = rng.uniform(-kPi, kPi);
    const double d = rng.uniform(0.6, 4.0);
    const Vec3d eye(d * std::cos(az), d * std::sin(az), rig.body_ratios.eye_height_ratio * stature - rig.camera_height);
    const Vec3d hip(eye.x(), eye.y(), rig.body_ratios.hip_height_ratio * stature - rig.camera_height);
    SubjectDetection det;
    det.eye_ray = ray_to(eye);
    det.hip_ray = ray_to(hip);
    CHECK((recover_eye_position(det, rig) - eye).norm() < 1e-9);
  }
}

TEST_CASE("body rays that miss the ground or are absent") {
  RigConfig rig;
  SubjectDetection det;
  det.eye_ray = ray_at(0.0, 0.0);
  det.feet_ray = ray_at(0.0, 5.0 * kPi / 180.0);
  CHECK(code_of([&] { recover_eye_position(det, rig); }) == ErrorCode::RayAboveHorizon);
  det.feet_ray.reset();
  CHECK(code_of([&] { recover_eye_position(det, rig); }) == ErrorCode::NoBodyRay);
}

TEST_CASE("scaling the rig scales the eye distance and keeps the label") {
  Rng rng(21);
  BoardGeometry board;
  for (int i = 0; i < 200; ++i) {
    RigConfig rig;
    rig.camera_height = rng.uniform(1.0, 2.0);
    const double az = rng.uniform(-kPi, kPi);
    const double d = rng.uniform(1.0, 4.0);
    const Vec3d eye(d * std::cos(az), d * std::sin(az), rng.uniform(-0.2, 0.2));
    const Vec3d feet(eye.x(), eye.y(), -rig.camera_height);
    MarkerObservation m;
    m.translation = Vec3d(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-1, 1));
    SubjectDetection det;
    det.eye_ray = ray_to(eye);
    det.feet_ray = ray_to(feet);
    const GazeLabel a = label_gaze(det, m, board, rig);

    RigConfig rig2 = rig;
    rig2.camera_height *= 2;
    MarkerObservation m2 = m;
    m2.translation *= 2;
    BoardGeometry board2;
    board2.cross_offset = 2 * board.cross_offset;
    const GazeLabel b = label_gaze(det, m2, board2, rig2);
    CHECK(b.eye.norm() == doctest::Approx(2 * a.eye.norm()).epsilon(1e-12));
    CHECK(deg2rad(angular_error(a.gaze, b.gaze)) < 1e-9);
  }
}

TEST_CASE("cross position examples") {
  BoardGeometry b;
  b.cross_offset = Vec3d(0.3, 0, 0);
  MarkerObservation m;
  m.translation = Vec3d(1, 2, 0);
  CHECK((cross_position(m, b) - Vec3d(1.3, 2, 0)).norm() < 1e-15);

  // Quarter turn about the vertical: x goes to y.
  m.rotation = rotation_about_up(kPi / 2);
  m.translation = Vec3d::Zero();
  CHECK((cross_position(m, b) - Vec3d(0, 0.3, 0)).norm() < 1e-15);

  b.cross_offset = Vec3d::Zero();
  m.translation = Vec3d(-0.5, 4, 0.25);
  CHECK((cross_position(m, b) - m.translation).norm() == 0.0);
}

TEST_CASE("label of a target at the camera origin is straight ahead") {
  RigConfig rig;
  const Vec3d eye(2.0, 1.0, 0.05);
  SubjectDetection det;
  det.eye_ray = ray_to(eye);
  det.feet_ray = ray_to(Vec3d(eye.x(), eye.y(), -rig.camera_height));
  BoardGeometry board;
  MarkerObservation m;
  m.translation = -board.cross_offset;
  const GazeLabel l = label_gaze(det, m, board, rig);
  CHECK(std::abs(l.spherical.yaw) < 1e-12);
  CHECK(std::abs(l.spherical.pitch) < 1e-12);
}

TEST_CASE("looking straight up lands at the pole") {
  RigConfig rig;
  const Vec3d eye(0.0, 2.0, 0.0);
  SubjectDetection det;
  det.eye_ray = ray_to(eye);
  det.feet_ray = ray_to(Vec3d(0.0, 2.0, -rig.camera_height));
  BoardGeometry board;
  board.cross_offset = Vec3d::Zero();
  MarkerObservation m;
  m.translation = eye + Vec3d(0.0, 0.001, 3.0);
  const GazeLabel l = label_gaze(det, m, board, rig);
  CHECK(l.spherical.pitch < kPi / 2);
  CHECK(l.spherical.pitch > kPi / 2 - 1e-3);
}

TEST_CASE("noiseless simulated frames round-trip through labelling") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SessionConfig cfg;
    cfg.seed = seed;
    cfg.noise = NoiseConfig{};
    const RigConfig rig = cfg.rig();
    for (const FrameRecord& f : simulate_session(cfg)) {
      const GazeLabel l = label_gaze(f.detection, f.marker, cfg.board, rig);
      REQUIRE(deg2rad(angular_error(l.gaze, from_spherical(f.gt_gaze))) < 1e-6);
      REQUIRE((l.eye - f.state.position).norm() < 1e-6);
    }
  }
}

TEST_CASE("rig validation") {
  RigConfig rig;
  rig.camera_height = 0;
  CHECK(code_of([&] { rig.validate(); }) == ErrorCode::ConfigError);
  rig.camera_height = 1.6;
  rig.body_ratios.hip_height_ratio = 0.95;
  CHECK(code_of([&] { rig.validate(); }) == ErrorCode::ConfigError);
}
