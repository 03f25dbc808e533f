#include "gazekit/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace gazekit {

using nlohmann::json;

namespace {

json vec_json(const Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3d json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ConfigError, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json ray_json(const std::optional<PixelRay>& r) {
  return r ? vec_json(r->direction.vec()) : json(nullptr);
}

// Stored rays are unit vectors already; keep them bit-exact unless they drifted.
PixelRay stored_ray(const json& j) {
  const Vec3d v = json_vec(j);
  return PixelRay{std::abs(v.norm() - 1.0) <= 1e-12 ? UnitVec3d::from_unit(v) : UnitVec3d::normalized(v)};
}

std::optional<PixelRay> json_ray(const json& j) {
  if (j.is_null()) return std::nullopt;
  return stored_ray(j);
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void read_range(const json& j, const char* key, double& lo, double& hi) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != 2) {
    throw Error(ErrorCode::ConfigError, std::string(key) + " must be [min, max]");
  }
  lo = (*it)[0].get<double>();
  hi = (*it)[1].get<double>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw Error(ErrorCode::ConfigError, std::string("unknown key '") + key + "' in " + where);
    }
  }
}

}  // namespace

json to_json(const FrameRecord& rec) {
  json det;
  det["eye_ray"] = vec_json(rec.detection.eye_ray.direction.vec());
  det["feet_ray"] = ray_json(rec.detection.feet_ray);
  det["hip_ray"] = ray_json(rec.detection.hip_ray);
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(rec.marker.rotation(r, c));
  }
  det["marker_rotation"] = std::move(rot);
  det["marker_translation"] = vec_json(rec.marker.translation);

  json j;
  j["session_id"] = rec.session_id;
  j["subject_id"] = rec.subject_id;
  j["frame_index"] = rec.frame_index;
  j["t"] = rec.t;
  j["features"] = std::vector<double>(rec.features.data(), rec.features.data() + rec.features.size());
  j["gt_yaw"] = rec.gt_gaze.yaw;
  j["gt_pitch"] = rec.gt_gaze.pitch;
  j["head_yaw"] = rec.head_yaw;
  j["head_pitch"] = rec.head_pitch;
  j["visible"] = rec.visible ? 1 : 0;
  j["detections"] = std::move(det);
  return j;
}

FrameRecord frame_from_json(const json& j) {
  try {
    FrameRecord rec;
    rec.session_id = j.at("session_id").get<int>();
    rec.subject_id = j.at("subject_id").get<int>();
    rec.frame_index = j.at("frame_index").get<int>();
    rec.t = j.at("t").get<double>();
    const auto feats = j.at("features").get<std::vector<double>>();
    rec.features = Eigen::Map<const Eigen::VectorXd>(feats.data(), static_cast<Eigen::Index>(feats.size()));
    rec.gt_gaze.yaw = j.at("gt_yaw").get<double>();
    rec.gt_gaze.pitch = j.at("gt_pitch").get<double>();
    rec.head_yaw = j.at("head_yaw").get<double>();
    rec.head_pitch = j.at("head_pitch").get<double>();
    rec.visible = j.at("visible").get<int>() != 0;
    const json& det = j.at("detections");
    rec.detection.subject_id = rec.subject_id;
    rec.detection.eye_ray = stored_ray(det.at("eye_ray"));
    rec.detection.feet_ray = json_ray(det.at("feet_ray"));
    rec.detection.hip_ray = json_ray(det.at("hip_ray"));
    const auto rot = det.at("marker_rotation").get<std::vector<double>>();
    if (rot.size() != 9) throw Error(ErrorCode::ConfigError, "marker_rotation must have 9 values");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rec.marker.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)];
    }
    rec.marker.translation = json_vec(det.at("marker_translation"));
    return rec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed frame record: ") + e.what());
  }
}

void write_jsonl(const std::string& path, const std::vector<FrameRecord>& records) {
  std::ostringstream out;
  for (const FrameRecord& r : records) out << to_json(r).dump() << '\n';
  write_text_file(path, out.str());
}

std::vector<FrameRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path);
  std::vector<FrameRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(frame_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
  }
  return out;
}

json to_json(const NoiseConfig& n) {
  return json{{"marker_rot_deg", n.marker_rot_deg}, {"marker_trans_m", n.marker_trans_m},
              {"keypoint_deg", n.keypoint_deg},     {"obs_base_deg", n.obs_base_deg},
              {"obs_yaw_gain", n.obs_yaw_gain},     {"head_obs_deg", n.head_obs_deg},
              {"occlusion_yaw_deg", n.occlusion_yaw_deg}, {"blink_prob", n.blink_prob},
              {"blur_bias", n.blur_bias}};
}

NoiseConfig noise_from_json(const json& j, NoiseConfig n) {
  reject_unknown(j,
                 {"marker_rot_deg", "marker_trans_m", "keypoint_deg", "obs_base_deg", "obs_yaw_gain",
                  "head_obs_deg", "occlusion_yaw_deg", "blink_prob", "blur_bias"},
                 "noise");
  try {
    read_field(j, "marker_rot_deg", n.marker_rot_deg);
    read_field(j, "marker_trans_m", n.marker_trans_m);
    read_field(j, "keypoint_deg", n.keypoint_deg);
    read_field(j, "obs_base_deg", n.obs_base_deg);
    read_field(j, "obs_yaw_gain", n.obs_yaw_gain);
    read_field(j, "head_obs_deg", n.head_obs_deg);
    read_field(j, "occlusion_yaw_deg", n.occlusion_yaw_deg);
    read_field(j, "blink_prob", n.blink_prob);
    read_field(j, "blur_bias", n.blur_bias);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("noise: ") + e.what());
  }
  n.validate();
  return n;
}

json to_json(const SessionConfig& c) {
  json j;
  j["session_id"] = c.session_id;
  j["n_subjects"] = c.n_subjects;
  j["subject_distance_range"] = {c.subject_distance_min, c.subject_distance_max};
  j["loop_radius_range"] = {c.loop_radius_min, c.loop_radius_max};
  j["eye_height_range"] = {c.eye_height_min, c.eye_height_max};
  j["feet_visible_distance"] = c.feet_visible_distance;
  j["camera_height"] = c.camera_height;
  j["fps"] = c.fps;
  j["move_freeze_period"] = c.move_freeze_period;
  j["loop_duration"] = c.loop_duration;
  j["transition_duration"] = c.transition_duration;
  j["inner_pass_duration"] = c.inner_pass_duration;
  j["inner_pass_distance"] = c.inner_pass_distance;
  j["inner_pass_half_length"] = c.inner_pass_half_length;
  j["oscillation_amplitude"] = c.oscillation_amplitude;
  j["oscillation_period"] = c.oscillation_period;
  j["head_lag"] = c.head_lag;
  j["eye_in_head_yaw_limit_deg"] = c.eye_in_head_yaw_limit_deg;
  j["eye_in_head_pitch_limit_deg"] = c.eye_in_head_pitch_limit_deg;
  j["body_ratios"] = {{"eye_height_ratio", c.body_ratios.eye_height_ratio},
                      {"hip_height_ratio", c.body_ratios.hip_height_ratio}};
  j["board_cross_offset"] = vec_json(c.board.cross_offset);
  j["noise"] = to_json(c.noise);
  j["seed"] = c.seed;
  return j;
}

SessionConfig session_from_json(const json& j, SessionConfig c) {
  reject_unknown(j,
                 {"session_id", "n_subjects", "subject_distance_range", "loop_radius_range",
                  "eye_height_range", "feet_visible_distance", "camera_height", "fps",
                  "move_freeze_period", "loop_duration", "transition_duration", "inner_pass_duration",
                  "inner_pass_distance", "inner_pass_half_length", "oscillation_amplitude",
                  "oscillation_period", "head_lag", "eye_in_head_yaw_limit_deg",
                  "eye_in_head_pitch_limit_deg", "body_ratios", "board_cross_offset", "noise", "seed"},
                 "session config");
  try {
    read_field(j, "session_id", c.session_id);
    read_field(j, "n_subjects", c.n_subjects);
    read_range(j, "subject_distance_range", c.subject_distance_min, c.subject_distance_max);
    read_range(j, "loop_radius_range", c.loop_radius_min, c.loop_radius_max);
    read_range(j, "eye_height_range", c.eye_height_min, c.eye_height_max);
    read_field(j, "feet_visible_distance", c.feet_visible_distance);
    read_field(j, "camera_height", c.camera_height);
    read_field(j, "fps", c.fps);
    read_field(j, "move_freeze_period", c.move_freeze_period);
    read_field(j, "loop_duration", c.loop_duration);
    read_field(j, "transition_duration", c.transition_duration);
    read_field(j, "inner_pass_duration", c.inner_pass_duration);
    read_field(j, "inner_pass_distance", c.inner_pass_distance);
    read_field(j, "inner_pass_half_length", c.inner_pass_half_length);
    read_field(j, "oscillation_amplitude", c.oscillation_amplitude);
    read_field(j, "oscillation_period", c.oscillation_period);
    read_field(j, "head_lag", c.head_lag);
    read_field(j, "eye_in_head_yaw_limit_deg", c.eye_in_head_yaw_limit_deg);
    read_field(j, "eye_in_head_pitch_limit_deg", c.eye_in_head_pitch_limit_deg);
    if (auto it = j.find("body_ratios"); it != j.end()) {
      reject_unknown(*it, {"eye_height_ratio", "hip_height_ratio"}, "body_ratios");
      read_field(*it, "eye_height_ratio", c.body_ratios.eye_height_ratio);
      read_field(*it, "hip_height_ratio", c.body_ratios.hip_height_ratio);
    }
    if (auto it = j.find("board_cross_offset"); it != j.end()) c.board.cross_offset = json_vec(*it);
    if (auto it = j.find("noise"); it != j.end()) c.noise = noise_from_json(*it, c.noise);
    read_field(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("session config: ") + e.what());
  }
  c.validate();
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IOFailure, "write failed for " + path);
}

}  // namespace gazekit
