#pragma once

// JSON and JSON-lines persistence for frame records and configs.
//
// Frame record line (keys are fixed):
//   session_id, subject_id, frame_index, t, features[F], gt_yaw, gt_pitch,
//   head_yaw, head_pitch, visible (0/1),
//   detections: { eye_ray[3], feet_ray[3] | null, hip_ray[3] | null,
//                 marker_rotation[9] (row-major), marker_translation[3] }

#include <json.hpp>

#include <string>
#include <vector>

#include "gazekit/simulator.hpp"

namespace gazekit {

nlohmann::json to_json(const FrameRecord& rec);
FrameRecord frame_from_json(const nlohmann::json& j);

void write_jsonl(const std::string& path, const std::vector<FrameRecord>& records);
std::vector<FrameRecord> read_jsonl(const std::string& path);

nlohmann::json to_json(const NoiseConfig& n);
NoiseConfig noise_from_json(const nlohmann::json& j, NoiseConfig base = {});

nlohmann::json to_json(const SessionConfig& c);
/// Missing keys keep the value from `base`; unknown keys are a ConfigError.
SessionConfig session_from_json(const nlohmann::json& j, SessionConfig base = {});

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace gazekit
