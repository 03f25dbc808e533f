#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "gazekit/checkpoint.hpp"
#include "gazekit/io.hpp"

using namespace gazekit;
using nlohmann::json;

namespace {

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gazekit_test_io_" + name)).string();
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

std::vector<FrameRecord> small_session() {
  SessionConfig c;
  c.loop_duration = 4;
  c.transition_duration = 1;
  c.inner_pass_duration = 2;
  c.seed = 77;
  return simulate_session(c);
}

}  // namespace

TEST_CASE("frame records survive a JSON-lines round trip exactly") {
  const auto recs = small_session();
  const std::string path = tmp("frames.jsonl");
  write_jsonl(path, recs);
  const auto back = read_jsonl(path);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const FrameRecord& a = recs[i];
    const FrameRecord& b = back[i];
    CHECK(a.subject_id == b.subject_id);
    CHECK(a.frame_index == b.frame_index);
    CHECK(a.t == b.t);
    CHECK((a.features - b.features).norm() == 0.0);
    CHECK(a.gt_gaze.yaw == b.gt_gaze.yaw);
    CHECK(a.gt_gaze.pitch == b.gt_gaze.pitch);
    CHECK(a.visible == b.visible);
    CHECK((a.marker.rotation - b.marker.rotation).norm() == 0.0);
    CHECK((a.detection.eye_ray.direction.vec() - b.detection.eye_ray.direction.vec()).norm() == 0.0);
    CHECK(a.detection.feet_ray.has_value() == b.detection.feet_ray.has_value());
  }
}

TEST_CASE("frame record keys are exactly the documented set") {
  const json j = to_json(small_session().front());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"detections", "features", "frame_index", "gt_pitch", "gt_yaw", "head_pitch",
                                         "head_yaw", "session_id", "subject_id", "t", "visible"});
  CHECK(j["detections"]["marker_rotation"].size() == 9);
  CHECK(j["visible"].is_number_integer());
}

TEST_CASE("malformed dataset lines and missing files") {
  const std::string path = tmp("bad.jsonl");
  write_text_file(path, "{\"session_id\": 1}\n");
  CHECK_THROWS_AS(read_jsonl(path), Error);
  CHECK(code_of([] { read_jsonl("/nonexistent/dir/x.jsonl"); }) == ErrorCode::IOFailure);
}

TEST_CASE("session configs round-trip and reject unknown keys") {
  SessionConfig c;
  c.n_subjects = 5;
  c.loop_radius_min = 2.5;
  c.noise.blur_bias = 0.5;
  c.noise.keypoint_deg = 0.7;
  const SessionConfig back = session_from_json(to_json(c));
  CHECK(back.n_subjects == 5);
  CHECK(back.loop_radius_min == 2.5);
  CHECK(back.noise.blur_bias == 0.5);
  CHECK(back.noise.keypoint_deg == 0.7);
  CHECK(to_json(back).dump() == to_json(c).dump());
  CHECK(code_of([] { session_from_json(json{{"n_subject", 4}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { session_from_json(json{{"noise", {{"gain", 1}}}}); }) == ErrorCode::ConfigError);
}

TEST_CASE("checkpoints restore every tensor bit for bit") {
  for (ModelKind kind : {ModelKind::Static, ModelKind::Trn, ModelKind::Lstm}) {
    ModelDims d;
    d.hidden = 6;
    d.embed = 5;
    d.state = 4;
    Checkpoint ck{init_model(kind, d, 0.2, 3), LossKind::Pinball, TrainConfig{}};
    // Values that need all 17 significant digits.
    ck.params.for_each([](const std::string&, Eigen::Ref<Eigen::MatrixXd> m) { m.array() += 1.0 / 3.0; });
    ck.train.lr = 1e-3;
    ck.train.dims = d;
    const std::string path = tmp(std::string("ck_") + to_string(kind) + ".json");
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.params.kind == kind);
    CHECK(back.loss == LossKind::Pinball);
    CHECK(back.train.lr == 1e-3);
    CHECK(back.params.dropout_rate == 0.2);
    std::vector<Eigen::MatrixXd> a, b;
    ck.params.for_each([&](const std::string&, const Eigen::Ref<const Eigen::MatrixXd>& m) { a.emplace_back(m); });
    back.params.for_each([&](const std::string&, const Eigen::Ref<const Eigen::MatrixXd>& m) { b.emplace_back(m); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("checkpoint layout") {
  Checkpoint ck{init_model(ModelKind::Static, {}, 0.0, 1), LossKind::Mse, TrainConfig{}};
  const json j = to_json(ck);
  CHECK(j["format"] == kCheckpointFormat);
  CHECK(j["version"] == kCheckpointVersion);
  CHECK(j["tensors"][0]["name"] == "mlp1.W");
  CHECK(j["tensors"][0]["shape"] == json::array({64, 8}));
  // Row-major: element (0, 1) is the second value.
  CHECK(j["tensors"][0]["values"][1].get<double>() == ck.params.mlp1.W(0, 1));
}

TEST_CASE("corrupt checkpoints are runtime failures") {
  Checkpoint ck{init_model(ModelKind::Static, {}, 0.0, 1), LossKind::Pinball, TrainConfig{}};
  json j = to_json(ck);
  j["tensors"][0]["shape"] = {3, 3};
  CHECK(code_of([&] { checkpoint_from_json(j); }) == ErrorCode::IOFailure);
  j = to_json(ck);
  j["tensors"].erase(0);
  CHECK(code_of([&] { checkpoint_from_json(j); }) == ErrorCode::IOFailure);
  j = to_json(ck);
  j["format"] = "other";
  CHECK(code_of([&] { checkpoint_from_json(j); }) == ErrorCode::IOFailure);
}

TEST_CASE("train config parsing") {
  const TrainConfig c = train_config_from_json(json{{"lr", 0.01}, {"loss", "mse"}, {"epochs", 3}});
  CHECK(c.lr == 0.01);
  CHECK(c.loss_kind == LossKind::Mse);
  CHECK(c.epochs == 3);
  CHECK(code_of([] { train_config_from_json(json{{"window", 6}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { train_config_from_json(json{{"learning_rate", 1}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { train_config_from_json(json{{"loss", "huber"}}); }) == ErrorCode::ConfigError);
}
