#pragma once

// Synthetic capture sessions: a target board circling the subjects and the
// camera, subjects fixating it under alternating move/freeze instructions,
// noisy rig detections, and a low-dimensional appearance proxy per frame.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gazekit/acquisition.hpp"
#include "gazekit/rng.hpp"

namespace gazekit {

/// Feature layout of the appearance proxy.
namespace feature {
inline constexpr int kHeadYaw = 0;
inline constexpr int kHeadPitch = 1;
inline constexpr int kEyeYaw = 2;
inline constexpr int kEyePitch = 3;
inline constexpr int kVisible = 4;
inline constexpr int kSinHeadYaw = 5;
inline constexpr int kCosHeadYaw = 6;
inline constexpr int kBlur = 7;
inline constexpr int kCount = 8;
/// Channels whose sign flips under a horizontal image mirror.
inline constexpr std::array<int, 3> kYawChannels = {kHeadYaw, kEyeYaw, kSinHeadYaw};
}  // namespace feature

/// Returns `x` with the yaw-carrying channels negated. Works on a single
/// feature row or on a frames-by-features window.
Eigen::MatrixXd mirror_features(const Eigen::MatrixXd& x);

struct NoiseConfig {
  double marker_rot_deg = 0.0;
  double marker_trans_m = 0.0;
  double keypoint_deg = 0.0;
  /// Eye-cue noise is obs_base_deg + obs_yaw_gain * |head yaw in rad|.
  double obs_base_deg = 0.0;
  double obs_yaw_gain = 0.0;
  double head_obs_deg = 0.0;
  double occlusion_yaw_deg = 140.0;
  /// Per-frame probability that eye cues drop out (blink, motion blur).
  double blink_prob = 0.0;
  /// Constant added to the blur channel; models a capture-domain change.
  double blur_bias = 0.0;

  void validate() const;

  /// Detection noise whose label error lands at a few degrees.
  static NoiseConfig calibrated_detection();
  /// Appearance noise used by the training experiments.
  static NoiseConfig default_observation();
  /// Both of the above.
  static NoiseConfig defaults();
};

struct SessionConfig {
  int session_id = 0;
  int n_subjects = 3;
  double subject_distance_min = 1.0;
  double subject_distance_max = 3.0;
  double loop_radius_min = 2.0;
  double loop_radius_max = 5.0;
  double eye_height_min = 1.50;
  double eye_height_max = 1.70;
  /// Subjects nearer than this have their feet out of view (hip ray only).
  double feet_visible_distance = 1.3;
  double camera_height = 1.6;
  double fps = 8.0;
  double move_freeze_period = 4.0;
  double loop_duration = 60.0;
  double transition_duration = 3.0;
  double inner_pass_duration = 15.0;
  double inner_pass_distance = 0.7;
  double inner_pass_half_length = 2.0;
  double oscillation_amplitude = 0.8;
  double oscillation_period = 6.0;
  double head_lag = 0.5;
  double eye_in_head_yaw_limit_deg = 50.0;
  double eye_in_head_pitch_limit_deg = 35.0;
  BodyRatios body_ratios;
  BoardGeometry board;
  NoiseConfig noise = NoiseConfig::defaults();
  std::uint64_t seed = 1;

  void validate() const;
  RigConfig rig() const;
  double duration() const { return loop_duration + transition_duration + inner_pass_duration; }
};

struct SubjectState {
  Vec3d position = Vec3d::Zero();
  double head_yaw = 0;
  double head_pitch = 0;
  double eye_in_head_yaw = 0;
  double eye_in_head_pitch = 0;
  bool frozen = false;
  /// Angular speed of the gaze target seen from the subject, rad/s.
  double gaze_speed = 0;
};

struct FrameRecord {
  int session_id = 0;
  int subject_id = 0;
  int frame_index = 0;
  double t = 0;
  SubjectDetection detection;
  MarkerObservation marker;
  Eigen::VectorXd features;
  Gaze gt_gaze;
  double head_yaw = 0;
  double head_pitch = 0;
  bool visible = true;
  // Simulation truth; not serialized.
  SubjectState state;
  Vec3d true_target = Vec3d::Zero();
};

struct TrajectorySample {
  double t = 0;
  Vec3d cross = Vec3d::Zero();
  Mat3d board_rotation = Mat3d::Identity();
};

struct Trajectory {
  double loop_radius = 0;
  Vec3d loop_center = Vec3d::Zero();
  std::vector<TrajectorySample> samples;
};

struct SessionLayout {
  std::vector<Vec3d> eyes;
  double cluster_azimuth = 0;
  double mean_eye_height = 0;
};

/// Subject placement for a session; deterministic in cfg.seed.
SessionLayout layout_subjects(const SessionConfig& cfg);

Trajectory generate_trajectory(const SessionConfig& cfg, const SessionLayout& layout);
Trajectory generate_trajectory(const SessionConfig& cfg);

/// Appearance proxy for one frame.
Eigen::VectorXd observe(const SubjectState& state, const Gaze& gt, const NoiseConfig& noise,
                        Rng& rng);

std::vector<FrameRecord> simulate_session(const SessionConfig& cfg);

struct LabelErrorStats {
  double mean_deg = 0;
  double median_deg = 0;
  double p90_deg = 0;
  std::size_t frames = 0;
};

struct ControlReport {
  LabelErrorStats combined;
  LabelErrorStats marker_rotation_only;
  LabelErrorStats marker_translation_only;
  LabelErrorStats keypoint_only;
};

/// Label error of noisy detections against simulation truth over `n_runs`
/// seeded sessions (seeds cfg.seed + run).
LabelErrorStats label_error(const SessionConfig& cfg, int n_runs);
ControlReport control_experiment(const SessionConfig& cfg, int n_runs);

struct SplitRatios {
  double train = 0.75;
  double val = 0.10;
  double test = 0.15;
};

struct DatasetSplit {
  std::vector<FrameRecord> train;
  std::vector<FrameRecord> val;
  std::vector<FrameRecord> test;
};

/// Subject-disjoint split; deterministic in `seed`.
DatasetSplit split_by_subject(const std::vector<std::vector<FrameRecord>>& sessions,
                              const SplitRatios& ratios, std::uint64_t seed);

/// Splits and writes train.jsonl / val.jsonl / test.jsonl under `out_dir`.
DatasetSplit export_dataset(const std::vector<std::vector<FrameRecord>>& sessions,
                            const SplitRatios& ratios, const std::string& out_dir,
                            std::uint64_t seed);

/// A window of consecutive frames from one subject stream.
struct Window {
  Eigen::MatrixXd frames;  // window x feature::kCount
  Gaze gt;
  double head_yaw = 0;
  bool visible = true;
  int subject_id = 0;
  int session_id = 0;
  int frame_index = 0;
};

/// Windows of `size` frames centered on each frame that has full context,
/// taking every `stride`-th center.
std::vector<Window> make_windows(const std::vector<FrameRecord>& records, int size,
                                 int stride = 1);

}  // namespace gazekit
