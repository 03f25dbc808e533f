#include "gazekit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <utility>

#include "gazekit/io.hpp"

namespace gazekit {

namespace {

constexpr double kPi = std::numbers::pi;

// Deterministic tangent basis around a unit direction.
std::pair<Vec3d, Vec3d> tangent_basis(const Vec3d& d) {
  Vec3d t1 = world_up<double>().cross(d);
  if (t1.norm() < 1e-9) t1 = Vec3d::UnitX().cross(d);
  t1.normalize();
  return {t1, d.cross(t1)};
}

// Small random rotation of a direction; consumes exactly two normals.
UnitVec3d perturb_direction(const Vec3d& d, double sigma_rad, Rng& rng) {
  const double a = rng.normal();
  const double b = rng.normal();
  const auto [t1, t2] = tangent_basis(d);
  return UnitVec3d::normalized(d + sigma_rad * (a * t1 + b * t2));
}

Mat3d facing_camera(const Vec3d& p) {
  Vec3d bz(-p.x(), -p.y(), 0.0);
  if (bz.norm() < 1e-9) bz = Vec3d::UnitX();
  bz.normalize();
  const Vec3d bx = world_up<double>().cross(bz).normalized();
  const Vec3d by = bz.cross(bx);
  Mat3d r;
  r.col(0) = bx;
  r.col(1) = by;
  r.col(2) = bz;
  return r;
}

LabelErrorStats summarize(std::vector<double> errs) {
  LabelErrorStats s;
  s.frames = errs.size();
  if (errs.empty()) return s;
  double sum = 0;
  for (double e : errs) sum += e;
  s.mean_deg = sum / static_cast<double>(errs.size());
  std::sort(errs.begin(), errs.end());
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(errs.size() - 1)));
    return errs[idx];
  };
  s.median_deg = at(0.5);
  s.p90_deg = at(0.9);
  return s;
}

}  // namespace

Eigen::MatrixXd mirror_features(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd m = x;
  if (x.cols() == feature::kCount) {
    for (int c : feature::kYawChannels) m.col(c) = -m.col(c);
  } else if (x.cols() == 1 && x.rows() == feature::kCount) {
    for (int c : feature::kYawChannels) m(c, 0) = -m(c, 0);
  } else {
    throw Error(ErrorCode::ShapeMismatch, "mirror_features expects the proxy feature layout");
  }
  return m;
}

void NoiseConfig::validate() const {
  const double vals[] = {marker_rot_deg, marker_trans_m, keypoint_deg, obs_base_deg,
                         obs_yaw_gain,   head_obs_deg,   occlusion_yaw_deg};
  for (double v : vals) {
    if (!(v >= 0) || !std::isfinite(v)) {
      throw Error(ErrorCode::ConfigError, "noise magnitudes must be finite and >= 0");
    }
  }
  if (!(blink_prob >= 0 && blink_prob <= 1)) {
    throw Error(ErrorCode::ConfigError, "blink_prob must lie in [0, 1]");
  }
  if (!std::isfinite(blur_bias)) throw Error(ErrorCode::ConfigError, "blur_bias must be finite");
}

NoiseConfig NoiseConfig::calibrated_detection() {
  NoiseConfig n;
  n.marker_rot_deg = 3.0;
  n.marker_trans_m = 0.08;
  n.keypoint_deg = 1.5;
  return n;
}

NoiseConfig NoiseConfig::default_observation() {
  NoiseConfig n;
  n.obs_base_deg = 2.0;
  n.obs_yaw_gain = 20.0;
  n.head_obs_deg = 3.0;
  n.blink_prob = 0.2;
  return n;
}

NoiseConfig NoiseConfig::defaults() {
  NoiseConfig n = default_observation();
  const NoiseConfig d = calibrated_detection();
  n.marker_rot_deg = d.marker_rot_deg;
  n.marker_trans_m = d.marker_trans_m;
  n.keypoint_deg = d.keypoint_deg;
  return n;
}

void SessionConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  require(n_subjects >= 1, "n_subjects must be >= 1");
  require(subject_distance_min > 0 && subject_distance_min <= subject_distance_max,
          "subject_distance_range must be positive and ordered");
  require(loop_radius_min > 0 && loop_radius_min <= loop_radius_max,
          "loop_radius_range must be positive and ordered");
  require(eye_height_min > 0 && eye_height_min <= eye_height_max,
          "eye_height_range must be positive and ordered");
  require(camera_height > 0, "camera_height must be positive");
  require(fps > 0, "fps must be positive");
  require(move_freeze_period > 0, "move_freeze_period must be positive");
  require(loop_duration > 0 && transition_duration >= 0 && inner_pass_duration >= 0,
          "phase durations must be non-negative, loop positive");
  require(inner_pass_distance > 0 && inner_pass_half_length >= 0, "inner pass geometry");
  require(oscillation_amplitude >= 0 && oscillation_period > 0, "oscillation");
  require(head_lag > 0, "head_lag must be positive");
  require(eye_in_head_yaw_limit_deg > 0 && eye_in_head_pitch_limit_deg > 0,
          "eye-in-head limits must be positive");
  noise.validate();
  rig().validate();
}

RigConfig SessionConfig::rig() const {
  RigConfig r;
  r.camera_height = camera_height;
  r.body_ratios = body_ratios;
  return r;
}

SessionLayout layout_subjects(const SessionConfig& cfg) {
  Rng rng = Rng::stream(cfg.seed, 0);
  SessionLayout layout;
  layout.cluster_azimuth = rng.uniform(-kPi, kPi);
  double height_sum = 0;
  for (int i = 0; i < cfg.n_subjects; ++i) {
    const double az = layout.cluster_azimuth + rng.uniform(-0.35, 0.35);
    // u^(2/3) puts the mean at 2.2 m for the default 1-3 m range.
    const double u = rng.uniform01();
    const double d = cfg.subject_distance_min +
                     (cfg.subject_distance_max - cfg.subject_distance_min) * std::pow(u, 2.0 / 3.0);
    const double h = rng.uniform(cfg.eye_height_min, cfg.eye_height_max);
    layout.eyes.emplace_back(d * std::cos(az), d * std::sin(az), h - cfg.camera_height);
    height_sum += h;
  }
  layout.mean_eye_height = height_sum / cfg.n_subjects;
  return layout;
}

Trajectory generate_trajectory(const SessionConfig& cfg) {
  return generate_trajectory(cfg, layout_subjects(cfg));
}

Trajectory generate_trajectory(const SessionConfig& cfg, const SessionLayout& layout) {
  Rng rng = Rng::stream(cfg.seed, 1);
  Trajectory traj;

  Vec3d centroid = Vec3d::Zero();
  for (const Vec3d& e : layout.eyes) centroid += Vec3d(e.x(), e.y(), 0.0);
  centroid /= static_cast<double>(layout.eyes.size());
  traj.loop_center = 0.5 * centroid;

  double needed = 0;
  for (const Vec3d& e : layout.eyes) {
    needed = std::max(needed, (Vec3d(e.x(), e.y(), 0.0) - traj.loop_center).norm() + 0.5);
  }
  const double r_lo = std::clamp(needed, cfg.loop_radius_min, cfg.loop_radius_max);
  traj.loop_radius = rng.uniform(r_lo, cfg.loop_radius_max);

  const double psi = layout.cluster_azimuth;
  const Vec3d toward(std::cos(psi), std::sin(psi), 0.0);
  const Vec3d lateral(-std::sin(psi), std::cos(psi), 0.0);
  const Vec3d loop_start = traj.loop_center + traj.loop_radius * toward;
  const Vec3d chord_a = cfg.inner_pass_distance * toward - cfg.inner_pass_half_length * lateral;
  const Vec3d chord_b = cfg.inner_pass_distance * toward + cfg.inner_pass_half_length * lateral;
  const double base_z = layout.mean_eye_height - cfg.camera_height;

  const double t_loop = cfg.loop_duration;
  const double t_trans = t_loop + cfg.transition_duration;
  const auto n_frames = static_cast<int>(std::floor(cfg.duration() * cfg.fps));
  traj.samples.reserve(static_cast<std::size_t>(n_frames));
  for (int k = 0; k < n_frames; ++k) {
    const double t = k / cfg.fps;
    Vec3d p;
    if (t < t_loop) {
      const double a = psi + 2.0 * kPi * t / t_loop;
      p = traj.loop_center + traj.loop_radius * Vec3d(std::cos(a), std::sin(a), 0.0);
    } else if (t < t_trans) {
      const double s = (t - t_loop) / cfg.transition_duration;
      p = (1.0 - s) * loop_start + s * chord_a;
    } else {
      const double s = cfg.inner_pass_duration > 0 ? (t - t_trans) / cfg.inner_pass_duration : 0.0;
      p = (1.0 - s) * chord_a + s * chord_b;
    }
    p.z() = base_z + cfg.oscillation_amplitude * std::sin(2.0 * kPi * t / cfg.oscillation_period);
    traj.samples.push_back({t, p, facing_camera(p)});
  }
  return traj;
}

Eigen::VectorXd observe(const SubjectState& state, const Gaze& gt, const NoiseConfig& noise,
                        Rng& rng) {
  // Fixed draw count per call keeps streams aligned across noise levels.
  const double n_head_yaw = rng.normal();
  const double n_head_pitch = rng.normal();
  const double n_eye_yaw = rng.normal();
  const double n_eye_pitch = rng.normal();
  const double u_blink = rng.uniform01();
  const double n_blur = rng.normal();

  const double head_sigma = deg2rad(noise.head_obs_deg);
  const double eye_sigma = deg2rad(noise.obs_base_deg + noise.obs_yaw_gain * std::abs(state.head_yaw));
  const bool occluded = std::abs(gt.yaw) > deg2rad(noise.occlusion_yaw_deg);
  const bool blink = u_blink < noise.blink_prob;
  const bool visible = !occluded && !blink;

  Eigen::VectorXd f(feature::kCount);
  const double head_yaw = wrap_angle(state.head_yaw + head_sigma * n_head_yaw);
  f[feature::kHeadYaw] = head_yaw;
  f[feature::kHeadPitch] = state.head_pitch + head_sigma * n_head_pitch;
  f[feature::kEyeYaw] = visible ? state.eye_in_head_yaw + eye_sigma * n_eye_yaw : 0.0;
  f[feature::kEyePitch] = visible ? state.eye_in_head_pitch + eye_sigma * n_eye_pitch : 0.0;
  f[feature::kVisible] = visible ? 1.0 : 0.0;
  f[feature::kSinHeadYaw] = std::sin(head_yaw);
  f[feature::kCosHeadYaw] = std::cos(head_yaw);
  f[feature::kBlur] = 0.1 * state.gaze_speed + noise.blur_bias + 0.01 * noise.obs_base_deg * n_blur;
  return f;
}

std::vector<FrameRecord> simulate_session(const SessionConfig& cfg) {
  cfg.validate();
  const SessionLayout layout = layout_subjects(cfg);
  const Trajectory traj = generate_trajectory(cfg, layout);
  const NoiseConfig& noise = cfg.noise;
  const double dt = 1.0 / cfg.fps;
  const double follow = 1.0 - std::exp(-dt / cfg.head_lag);
  const double yaw_limit = deg2rad(cfg.eye_in_head_yaw_limit_deg);
  const double pitch_limit = deg2rad(cfg.eye_in_head_pitch_limit_deg);
  const double ch = cfg.camera_height;

  // Marker noise is shared by all subjects of a frame.
  std::vector<MarkerObservation> markers;
  markers.reserve(traj.samples.size());
  {
    Rng rng = Rng::stream(cfg.seed, 2);
    for (const TrajectorySample& s : traj.samples) {
      const Vec3d w = rng.normal3() * deg2rad(noise.marker_rot_deg);
      const Vec3d dt_noise = rng.normal3() * noise.marker_trans_m;
      const Vec3d true_translation = s.cross - s.board_rotation * cfg.board.cross_offset;
      MarkerObservation m;
      const double angle = w.norm();
      const Mat3d dr = angle > 0 ? Mat3d(Eigen::AngleAxisd(angle, w / angle)) : Mat3d::Identity();
      m.rotation = dr * s.board_rotation;
      m.translation = true_translation + dt_noise;
      markers.push_back(m);
    }
  }

  std::vector<FrameRecord> out;
  out.reserve(traj.samples.size() * layout.eyes.size());
  for (std::size_t i = 0; i < layout.eyes.size(); ++i) {
    const Vec3d& eye = layout.eyes[i];
    Rng det_rng = Rng::stream(cfg.seed, 100 + i);
    Rng obs_rng = Rng::stream(cfg.seed, 200 + i);
    const double stature = (eye.z() + ch) / cfg.body_ratios.eye_height_ratio;
    const Vec3d feet(eye.x(), eye.y(), -ch);
    const Vec3d hip(eye.x(), eye.y(), cfg.body_ratios.hip_height_ratio * stature - ch);
    const bool feet_visible = std::hypot(eye.x(), eye.y()) >= cfg.feet_visible_distance;

    SubjectState state;
    state.position = eye;
    Vec3d prev_dir = Vec3d::Zero();
    for (std::size_t k = 0; k < traj.samples.size(); ++k) {
      const TrajectorySample& s = traj.samples[k];
      const UnitVec3d g = gaze_in_eye_coords(s.cross, eye);
      const Gaze gt = to_spherical(g);
      const Vec3d dir = (s.cross - eye).normalized();

      state.frozen = static_cast<long>(std::floor(s.t / cfg.move_freeze_period)) % 2 == 1;
      if (k == 0) {
        state.head_yaw = gt.yaw;
        state.head_pitch = gt.pitch;
        state.gaze_speed = 0;
      } else {
        state.gaze_speed = std::acos(std::clamp(dir.dot(prev_dir), -1.0, 1.0)) / dt;
        if (!state.frozen) {
          state.head_yaw = wrap_angle(state.head_yaw + follow * wrap_angle(gt.yaw - state.head_yaw));
          state.head_pitch += follow * (gt.pitch - state.head_pitch);
        }
      }
      prev_dir = dir;
      // The head is dragged along only when the eye reaches its rotation limit.
      state.eye_in_head_yaw = wrap_angle(gt.yaw - state.head_yaw);
      if (std::abs(state.eye_in_head_yaw) > yaw_limit) {
        state.eye_in_head_yaw = std::copysign(yaw_limit, state.eye_in_head_yaw);
        state.head_yaw = wrap_angle(gt.yaw - state.eye_in_head_yaw);
      }
      state.eye_in_head_pitch = gt.pitch - state.head_pitch;
      if (std::abs(state.eye_in_head_pitch) > pitch_limit) {
        state.eye_in_head_pitch = std::copysign(pitch_limit, state.eye_in_head_pitch);
        state.head_pitch = gt.pitch - state.eye_in_head_pitch;
      }

      const double kp = deg2rad(noise.keypoint_deg);
      FrameRecord rec;
      rec.session_id = cfg.session_id;
      rec.subject_id = cfg.session_id * 100 + static_cast<int>(i);
      rec.frame_index = static_cast<int>(k);
      rec.t = s.t;
      rec.detection.subject_id = rec.subject_id;
      rec.detection.eye_ray = {perturb_direction(eye.normalized(), kp, det_rng)};
      const PixelRay feet_ray{perturb_direction(feet.normalized(), kp, det_rng)};
      const PixelRay hip_ray{perturb_direction(hip.normalized(), kp, det_rng)};
      if (feet_visible) rec.detection.feet_ray = feet_ray;
      rec.detection.hip_ray = hip_ray;
      rec.marker = markers[k];
      rec.features = observe(state, gt, noise, obs_rng);
      rec.gt_gaze = gt;
      rec.head_yaw = state.head_yaw;
      rec.head_pitch = state.head_pitch;
      rec.visible = rec.features[feature::kVisible] > 0.5;
      rec.state = state;
      rec.true_target = s.cross;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

LabelErrorStats label_error(const SessionConfig& cfg, int n_runs) {
  const RigConfig rig = cfg.rig();
  std::vector<double> errs;
  for (int run = 0; run < n_runs; ++run) {
    SessionConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(run);
    for (const FrameRecord& f : simulate_session(c)) {
      const GazeLabel label = label_gaze(f.detection, f.marker, c.board, rig);
      errs.push_back(angular_error(label.gaze, from_spherical(f.gt_gaze)));
    }
  }
  return summarize(std::move(errs));
}

ControlReport control_experiment(const SessionConfig& cfg, int n_runs) {
  ControlReport report;
  report.combined = label_error(cfg, n_runs);
  const auto only = [&](auto setter) {
    SessionConfig c = cfg;
    c.noise.marker_rot_deg = 0;
    c.noise.marker_trans_m = 0;
    c.noise.keypoint_deg = 0;
    setter(c.noise);
    return label_error(c, n_runs);
  };
  report.marker_rotation_only = only([&](NoiseConfig& n) { n.marker_rot_deg = cfg.noise.marker_rot_deg; });
  report.marker_translation_only = only([&](NoiseConfig& n) { n.marker_trans_m = cfg.noise.marker_trans_m; });
  report.keypoint_only = only([&](NoiseConfig& n) { n.keypoint_deg = cfg.noise.keypoint_deg; });
  return report;
}

DatasetSplit split_by_subject(const std::vector<std::vector<FrameRecord>>& sessions,
                              const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::ConfigError, "split ratios must be non-negative and sum to 1");
  }
  std::set<int> ids;
  for (const auto& s : sessions) {
    for (const FrameRecord& f : s) ids.insert(f.subject_id);
  }
  const int n = static_cast<int>(ids.size());
  if (n < 3) throw Error(ErrorCode::TooFewSubjects, "need at least 3 subjects to split");

  std::vector<int> order(ids.begin(), ids.end());
  Rng rng = Rng::stream(seed, 3);
  rng.shuffle(order.begin(), order.end());
  const int n_test = std::max(1, static_cast<int>(std::lround(n * ratios.test)));
  const int n_val = std::max(1, static_cast<int>(std::lround(n * ratios.val)));
  const int n_train = n - n_test - n_val;
  if (n_train < 1) throw Error(ErrorCode::TooFewSubjects, "no subjects left for training");

  std::map<int, int> bucket;
  for (int k = 0; k < n; ++k) bucket[order[k]] = k < n_train ? 0 : (k < n_train + n_val ? 1 : 2);

  DatasetSplit split;
  for (const auto& s : sessions) {
    for (const FrameRecord& f : s) {
      switch (bucket.at(f.subject_id)) {
        case 0: split.train.push_back(f); break;
        case 1: split.val.push_back(f); break;
        default: split.test.push_back(f); break;
      }
    }
  }
  return split;
}

DatasetSplit export_dataset(const std::vector<std::vector<FrameRecord>>& sessions,
                            const SplitRatios& ratios, const std::string& out_dir,
                            std::uint64_t seed) {
  DatasetSplit split = split_by_subject(sessions, ratios, seed);
  write_jsonl(out_dir + "/train.jsonl", split.train);
  write_jsonl(out_dir + "/val.jsonl", split.val);
  write_jsonl(out_dir + "/test.jsonl", split.test);
  return split;
}

std::vector<Window> make_windows(const std::vector<FrameRecord>& records, int size, int stride) {
  if (size < 1 || size % 2 == 0) throw Error(ErrorCode::ConfigError, "window size must be odd");
  if (stride < 1) throw Error(ErrorCode::ConfigError, "stride must be >= 1");
  // Streams keyed by (session, subject), frames in index order.
  std::map<std::pair<int, int>, std::vector<const FrameRecord*>> streams;
  std::vector<std::pair<int, int>> order;
  for (const FrameRecord& f : records) {
    const auto key = std::make_pair(f.session_id, f.subject_id);
    auto [it, inserted] = streams.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&f);
  }
  const int half = size / 2;
  std::vector<Window> out;
  for (const auto& key : order) {
    auto& frames = streams[key];
    std::stable_sort(frames.begin(), frames.end(),
                     [](const FrameRecord* a, const FrameRecord* b) { return a->frame_index < b->frame_index; });
    const int n = static_cast<int>(frames.size());
    for (int c = half; c + half < n; c += stride) {
      Window w;
      w.frames.resize(size, feature::kCount);
      for (int j = 0; j < size; ++j) w.frames.row(j) = frames[c - half + j]->features.transpose();
      const FrameRecord& center = *frames[c];
      w.gt = center.gt_gaze;
      w.head_yaw = center.head_yaw;
      w.visible = center.visible;
      w.subject_id = center.subject_id;
      w.session_id = center.session_id;
      w.frame_index = center.frame_index;
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace gazekit
