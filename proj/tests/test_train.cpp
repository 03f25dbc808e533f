#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gazekit/train.hpp"

using namespace gazekit;

namespace {

std::vector<Window> windows_for(std::uint64_t seed, int subjects) {
  SessionConfig c;
  c.seed = seed;
  c.n_subjects = subjects;
  c.loop_duration = 12;
  c.inner_pass_duration = 4;
  c.transition_duration = 1;
  return make_windows(simulate_session(c), 7, 3);
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.dims = ModelDims{8, 8, 6, 4, 1, 7};
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  cfg.seed = 4;
  return cfg;
}

Window labeled(double yaw_deg, double pitch_deg) {
  Window w;
  w.frames = Eigen::MatrixXd::Zero(7, feature::kCount);
  w.gt = {deg2rad(yaw_deg), deg2rad(pitch_deg), {}};
  return w;
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

TEST_CASE("training is reproducible and improves on the mean") {
  const auto tr = windows_for(1, 3);
  const auto va = windows_for(2, 2);
  for (ModelKind kind : {ModelKind::Static, ModelKind::Lstm}) {
    const TrainResult a = train(tr, va, quick_config(), kind);
    const TrainResult b = train(tr, va, quick_config(), kind);
    REQUIRE(a.history.size() == 3);
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].train_loss == b.history[i].train_loss);
      CHECK(a.history[i].val_loss == b.history[i].val_loss);
      CHECK(a.history[i].val_mean_error_deg == b.history[i].val_mean_error_deg);
    }
    CHECK(a.best_epoch == b.best_epoch);
    CHECK(a.history.back().train_loss < a.history.front().train_loss);
    // The returned parameters are the best validation epoch.
    double best = 1e300;
    for (const EpochMetrics& m : a.history) best = std::min(best, m.val_loss);
    CHECK(a.history[a.best_epoch].val_loss == best);
  }
}

TEST_CASE("training rejects empty splits and bad configs") {
  const auto tr = windows_for(1, 2);
  CHECK(code_of([&] { train(tr, {}, quick_config(), ModelKind::Static); }) == ErrorCode::EmptyDataset);
  TrainConfig cfg = quick_config();
  cfg.lr = 0;
  CHECK(code_of([&] { train(tr, tr, cfg, ModelKind::Static); }) == ErrorCode::ConfigError);
  cfg = quick_config();
  cfg.window = 4;
  CHECK(code_of([&] { train(tr, tr, cfg, ModelKind::Static); }) == ErrorCode::ConfigError);
}

TEST_CASE("threaded prediction equals the serial result") {
  const auto ws = windows_for(3, 3);
  const ModelParams p = init_model(ModelKind::Trn, {}, 0.2, 2);
  const auto a = predict_windows(p, ws, LossKind::Pinball, 1);
  const auto b = predict_windows(p, ws, LossKind::Pinball, 4);
  REQUIRE(a.size() == ws.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].yaw == b[i].yaw);
    CHECK(*a[i].sigma == *b[i].sigma);
  }
  CHECK_FALSE(predict_windows(p, ws, LossKind::Mse)[0].sigma.has_value());
}

TEST_CASE("mean baseline uses a circular yaw mean") {
  const Gaze same = mean_baseline(std::vector<Window>{labeled(40, 10), labeled(40, 10)});
  CHECK(rad2deg(same.yaw) == doctest::Approx(40));
  CHECK(rad2deg(same.pitch) == doctest::Approx(10));
  const Gaze rear = mean_baseline(std::vector<Window>{labeled(170, 0), labeled(-170, 20)});
  CHECK(std::abs(rad2deg(rear.yaw)) == doctest::Approx(180));
  CHECK(rad2deg(rear.pitch) == doctest::Approx(10));
  CHECK(code_of([] { mean_baseline(std::vector<Window>{}); }) == ErrorCode::EmptyDataset);
  CHECK(code_of([] { mean_baseline(std::vector<FrameRecord>{}); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("MC-dropout uncertainty") {
  const Eigen::MatrixXd w = windows_for(5, 2).front().frames;
  const ModelParams off = init_model(ModelKind::Static, {}, 0.0, 1);
  CHECK(code_of([&] { mc_dropout_uncertainty(off, w, 5, 1); }) == ErrorCode::DropoutDisabled);

  const ModelParams p = init_model(ModelKind::Lstm, {}, 0.2, 1);
  CHECK(mc_dropout_uncertainty(p, w, 1, 3).sigma == 0.0);
  const McDropoutResult a = mc_dropout_uncertainty(p, w, 5, 3);
  const McDropoutResult b = mc_dropout_uncertainty(p, w, 5, 3);
  CHECK(a.sigma > 0);
  CHECK(a.sigma == b.sigma);
  CHECK(a.mean.yaw == b.mean.yaw);
  CHECK(mc_dropout_uncertainty(p, w, 5, 4).sigma != a.sigma);
}
