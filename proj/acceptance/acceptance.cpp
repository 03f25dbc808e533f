// Acceptance suite: one PASS/FAIL line per criterion.
//
//   gazekit_acceptance [--only 4,5] [--cli path/to/gazekit]
//
// Exit status is 0 when every selected criterion passes.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gazekit/acquisition.hpp"
#include "gazekit/adapt.hpp"
#include "gazekit/gradcheck.hpp"
#include "gazekit/metrics.hpp"
#include "gazekit/mollweide.hpp"
#include "gazekit/simulator.hpp"
#include "gazekit/train.hpp"
#include "support/cli_pipeline.hpp"

using namespace gazekit;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSeeds = 5;

// Mean label error (degrees) under the default noise, seeds 1-5, one
// session each. Pinned at first calibration.
constexpr double kPinnedDefaultLabelError = 3.1030911913;
constexpr double kPinnedTolerance = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.2f") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double mean_error(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts) {
  return subset_errors(preds, gts).mean_all;
}

// ---------------------------------------------------------------------------
// Shared seeded experiment: 20 sessions split by subject, four models.

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<Window> train, val, test;
  std::vector<Gaze> gts;
  ModelParams static_pinball;
  std::vector<Gaze> pred_static, pred_trn, pred_lstm, pred_mse, pred_mc;
  Gaze mean_gaze;
  double static_pipeline_seconds = 0;
};

TrainConfig experiment_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.lr = 1e-3;
  cfg.batch_size = 32;
  cfg.dropout_rate = 0;
  cfg.seed = seed;
  return cfg;
}

SeedRun run_seed(std::uint64_t seed) {
  SeedRun r;
  r.seed = seed;
  Stopwatch clock;
  std::vector<std::vector<FrameRecord>> sessions;
  for (int i = 0; i < 20; ++i) {
    SessionConfig c;
    c.session_id = i;
    c.seed = seed * 1000 + static_cast<std::uint64_t>(i);
    sessions.push_back(simulate_session(c));
  }
  const DatasetSplit data = split_by_subject(sessions, {}, seed);
  r.train = make_windows(data.train, 7, 2);
  r.val = make_windows(data.val, 7, 2);
  r.test = make_windows(data.test, 7, 1);
  for (const Window& w : r.test) r.gts.push_back(w.gt);

  const TrainConfig cfg = experiment_config(seed);
  r.static_pinball = train(r.train, r.val, cfg, ModelKind::Static).params;
  r.pred_static = predict_windows(r.static_pinball, r.test, LossKind::Pinball);
  r.static_pipeline_seconds = clock.seconds();

  r.pred_trn = predict_windows(train(r.train, r.val, cfg, ModelKind::Trn).params, r.test, LossKind::Pinball);
  r.pred_lstm = predict_windows(train(r.train, r.val, cfg, ModelKind::Lstm).params, r.test, LossKind::Pinball);

  TrainConfig mse = cfg;
  mse.loss_kind = LossKind::Mse;
  mse.dropout_rate = 0.2;
  const ModelParams mse_params = train(r.train, r.val, mse, ModelKind::Static).params;
  r.pred_mse = predict_windows(mse_params, r.test, LossKind::Mse);
  r.pred_mc = mc_dropout_predict(mse_params, r.test, 5, seed);
  r.mean_gaze = mean_baseline(r.train);
  return r;
}

const std::vector<SeedRun>& seed_runs() {
  static const std::vector<SeedRun> runs = [] {
    std::vector<SeedRun> v;
    for (std::uint64_t s = 1; s <= kSeeds; ++s) {
      std::fprintf(stderr, "  training models for seed %llu...\n", static_cast<unsigned long long>(s));
      v.push_back(run_seed(s));
    }
    return v;
  }();
  return runs;
}

// ---------------------------------------------------------------------------

Outcome geometry_exactness() {
  Stopwatch clock;
  Rng rng(2024);
  double origin = 0, round_trip = 0, rotation = 0;
  for (int i = 0; i < 10000; ++i) {
    const double az = rng.uniform(-kPi, kPi);
    const double d = rng.uniform(0.5, 8.0);
    const Vec3d eye(d * std::cos(az), d * std::sin(az), rng.uniform(-1.5, 1.5));
    origin = std::max(origin, (gaze_in_eye_coords(Vec3d(Vec3d::Zero()), eye).vec() - Vec3d(0, 0, -1)).norm());

    const Vec3d target = eye + rng.uniform(0.3, 5.0) * rng.normal3().normalized();
    const UnitVec3d g = gaze_in_eye_coords(target, eye);
    // Directions within 1e-6 of a pole carry no yaw information.
    if (std::abs(g.y()) < 1 - 1e-6) {
      round_trip = std::max(round_trip, (from_spherical(to_spherical(g)).vec() - g.vec()).norm());
    }
    const Mat3d rot = rotation_about_up(rng.uniform(-kPi, kPi));
    rotation = std::max(rotation, (gaze_in_eye_coords(Vec3d(rot * target), Vec3d(rot * eye)).vec() - g.vec()).norm());
  }
  const double secs = clock.seconds();
  const bool pass = origin < 1e-9 && round_trip < 1e-9 && rotation < 1e-9 && secs < 1.0;
  return {pass, fmt("origin %.1e, round trip %.1e, rotation %.1e (tol 1e-9); %.3f s (< 1 s)", origin, round_trip,
                    rotation, secs)};
}

Outcome label_oracle() {
  Stopwatch clock;
  double worst = 0;
  std::size_t frames = 0;
  for (std::uint64_t seed = 1; frames < 10000; ++seed) {
    SessionConfig cfg;
    cfg.seed = seed;
    cfg.noise = NoiseConfig{};
    const RigConfig rig = cfg.rig();
    for (const FrameRecord& f : simulate_session(cfg)) {
      if (frames == 10000) break;
      const GazeLabel l = label_gaze(f.detection, f.marker, cfg.board, rig);
      worst = std::max(worst, deg2rad(angular_error(l.gaze, from_spherical(f.gt_gaze))));
      ++frames;
    }
  }
  const double secs = clock.seconds();
  return {worst < 1e-6 && secs < 10.0,
          fmt("max error %.2e rad over %zu frames (< 1e-6); %.2f s (< 10 s)", worst, frames, secs)};
}

Outcome control_experiment_behavior() {
  struct Knob {
    const char* name;
    double NoiseConfig::*field;
  };
  const Knob knobs[] = {{"marker rotation", &NoiseConfig::marker_rot_deg},
                        {"marker translation", &NoiseConfig::marker_trans_m},
                        {"keypoint", &NoiseConfig::keypoint_deg}};
  const double levels[] = {0.25, 0.5, 1.0, 1.5, 2.0};
  const NoiseConfig defaults = NoiseConfig::defaults();
  int violations = 0;
  for (const Knob& k : knobs) {
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      double prev = -1;
      for (double m : levels) {
        // Each source in isolation: the other detection noises are zero.
        SessionConfig cfg;
        cfg.seed = seed;
        cfg.noise.marker_rot_deg = 0;
        cfg.noise.marker_trans_m = 0;
        cfg.noise.keypoint_deg = 0;
        cfg.noise.*k.field = defaults.*k.field * m;
        const double e = label_error(cfg, 1).mean_deg;
        violations += !(e > prev);
        prev = e;
      }
    }
  }
  std::vector<double> per_seed;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    SessionConfig cfg;
    cfg.seed = seed;
    per_seed.push_back(label_error(cfg, 1).mean_deg);
  }
  const double m = mean(per_seed);
  const bool in_range = m >= 1.0 && m <= 6.0;
  const bool pinned = std::abs(m - kPinnedDefaultLabelError) <= kPinnedTolerance;
  return {violations == 0 && in_range && pinned,
          fmt("monotonicity violations %d of 75 steps; default-noise mean %.10f deg (in [1, 6]: %s; pinned %.10f: %s)",
              violations, m, in_range ? "yes" : "no", kPinnedDefaultLabelError, pinned ? "match" : "MISMATCH")};
}

Outcome quantile_calibration() {
  std::vector<double> cov;
  double slowest = 0;
  for (const SeedRun& r : seed_runs()) {
    cov.push_back(coverage(r.pred_static, r.gts).per_angle);
    slowest = std::max(slowest, r.static_pipeline_seconds);
  }
  const bool all_in = std::all_of(cov.begin(), cov.end(), [](double c) { return std::abs(c - 0.80) <= 0.05; });
  return {all_in && slowest < 300.0,
          fmt("per-angle coverage by seed [%s] (each 0.80 +- 0.05); slowest pipeline %.0f s (< 300 s)",
              join(cov, "%.3f").c_str(), slowest)};
}

Outcome uncertainty_ranking() {
  std::vector<double> pin, mc;
  for (const SeedRun& r : seed_runs()) {
    std::vector<double> s_pin, s_mc;
    for (const Gaze& g : r.pred_static) s_pin.push_back(*g.sigma);
    for (const Gaze& g : r.pred_mc) s_mc.push_back(*g.sigma);
    pin.push_back(spearman(s_pin, angular_errors(r.pred_static, r.gts)));
    mc.push_back(spearman(s_mc, angular_errors(r.pred_mc, r.gts)));
  }
  const double mp = mean(pin), mm = mean(mc);
  return {mp > 0.3 && mp > mm, fmt("mean spearman pinball %.3f [%s] vs MC-dropout %.3f [%s] (> 0.3 and > MC)", mp,
                                   join(pin, "%.3f").c_str(), mm, join(mc, "%.3f").c_str())};
}

Outcome temporal_benefit() {
  std::vector<double> st, trn, lstm;
  int wins = 0;
  for (const SeedRun& r : seed_runs()) {
    st.push_back(mean_error(r.pred_static, r.gts));
    trn.push_back(mean_error(r.pred_trn, r.gts));
    lstm.push_back(mean_error(r.pred_lstm, r.gts));
    wins += lstm.back() < st.back();
  }
  const double ms = mean(st), mt = mean(trn), ml = mean(lstm);
  const bool between = mt >= std::min(ms, ml) - 0.5 && mt <= std::max(ms, ml) + 0.5;
  return {wins >= 4 && between,
          fmt("lstm < static in %d/5 seeds (>= 4); mean error static %.2f, trn %.2f, lstm %.2f (trn between +- 0.5); "
              "static [%s] lstm [%s]",
              wins, ms, mt, ml, join(st).c_str(), join(lstm).c_str())};
}

Outcome yaw_trend() {
  std::vector<double> rho_err, rho_sigma;
  for (const SeedRun& r : seed_runs()) {
    std::vector<double> centers, errs, sigmas;
    for (const YawBin& b : yaw_curve(r.pred_static, r.gts, 15.0)) {
      // Bins from the one at 0 degrees through the one containing 150.
      if (b.center_deg > 150.0 + 7.5) continue;
      centers.push_back(b.center_deg);
      errs.push_back(b.mean_error_deg);
      sigmas.push_back(b.mean_sigma_deg);
    }
    rho_err.push_back(spearman(centers, errs));
    rho_sigma.push_back(spearman(centers, sigmas));
  }
  const double me = mean(rho_err), ms = mean(rho_sigma);
  return {me > 0.7 && ms > 0.7, fmt("mean rank correlation with |yaw|: error %.3f [%s], sigma %.3f [%s] (> 0.7)", me,
                                    join(rho_err, "%.2f").c_str(), ms, join(rho_sigma, "%.2f").c_str())};
}

Outcome domain_adaptation() {
  int improved = 0;
  double worst_src = -1e9;
  std::vector<double> before, after;
  for (const SeedRun& r : seed_runs()) {
    std::vector<std::vector<FrameRecord>> sessions;
    for (int i = 0; i < 8; ++i) {
      SessionConfig c;
      c.session_id = 50 + i;
      c.seed = r.seed * 1000 + 500 + static_cast<std::uint64_t>(i);
      c.noise.blur_bias = 0.5;
      sessions.push_back(simulate_session(c));
    }
    const DatasetSplit tgt = split_by_subject(sessions, {}, r.seed);
    const auto tgt_train = make_windows(tgt.train, 7, 2);
    const auto tgt_test = make_windows(tgt.test, 7, 1);
    std::vector<Gaze> tgt_gts;
    for (const Window& w : tgt_test) tgt_gts.push_back(w.gt);

    AdaptConfig cfg;
    cfg.seed = r.seed;
    const AdaptResult a = adapt_train(r.static_pinball, r.train, tgt_train, cfg);
    const double tb = mean_error(predict_windows(r.static_pinball, tgt_test, LossKind::Pinball), tgt_gts);
    const double ta = mean_error(predict_windows(a.params, tgt_test, LossKind::Pinball), tgt_gts);
    const double sb = mean_error(r.pred_static, r.gts);
    const double sa = mean_error(predict_windows(a.params, r.test, LossKind::Pinball), r.gts);
    before.push_back(tb);
    after.push_back(ta);
    improved += ta < tb;
    worst_src = std::max(worst_src, (sa - sb) / sb);
  }
  return {improved >= 4 && worst_src < 0.10,
          fmt("target error improved in %d/5 seeds (>= 4): [%s] -> [%s]; worst source change %+.1f%% (< 10%%)",
              improved, join(before).c_str(), join(after).c_str(), 100 * worst_src)};
}

Outcome gradient_check() {
  Rng rng(5);
  double worst = 0;
  std::string where;
  for (int c = 0; c < 20; ++c) {
    ModelDims d;
    d.hidden = 2 + static_cast<int>(rng.below(6));
    d.embed = 2 + static_cast<int>(rng.below(5));
    d.state = 2 + static_cast<int>(rng.below(4));
    d.layers = 1 + static_cast<int>(rng.below(2));
    const auto kind = static_cast<ModelKind>(c % 3);
    const LossKind loss = c % 2 ? LossKind::Mse : LossKind::Pinball;
    BatchInput in;
    for (int t = 0; t < 7; ++t) {
      Eigen::MatrixXd f(8, 5);
      for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
      in.frames.push_back(f);
    }
    Eigen::MatrixXd targets(2, 5);
    for (int j = 0; j < 5; ++j) {
      targets(0, j) = rng.uniform(-3, 3);
      targets(1, j) = rng.uniform(-1, 1);
    }
    RegressorCheckOptions opts;
    opts.with_dropout = c % 4 == 1;
    const RegressorCheck r = check_regressor_gradients(init_model(kind, d, 0.3, c), in, targets, loss, opts);
    if (r.result.max_rel_error > worst) {
      worst = r.result.max_rel_error;
      where = fmt("config %d %s/%s %s", c, to_string(kind), to_string(loss), r.result.worst_tensor.c_str());
    }
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 20 configurations (< 1e-4), worst at %s", worst,
                            where.c_str())};
}

Outcome mean_baseline_sanity() {
  double worst_ratio = 1e9;
  std::vector<double> baseline;
  for (const SeedRun& r : seed_runs()) {
    const double b = mean_error(std::vector<Gaze>(r.gts.size(), r.mean_gaze), r.gts);
    baseline.push_back(b);
    for (const auto* p : {&r.pred_static, &r.pred_trn, &r.pred_lstm, &r.pred_mse}) {
      worst_ratio = std::min(worst_ratio, b / mean_error(*p, r.gts));
    }
  }
  return {worst_ratio > 3.0, fmt("mean-gaze error [%s] deg; smallest ratio to a trained model %.1fx (> 3x)",
                                 join(baseline, "%.1f").c_str(), worst_ratio)};
}

Outcome cli_determinism(const std::string& cli) {
  const auto a = testing::fresh_dir("gazekit_acceptance_cli_a");
  const auto b = testing::fresh_dir("gazekit_acceptance_cli_b");
  const testing::PipelineRun ra = testing::run_pipeline(cli, a);
  if (ra.exit_code != 0) return {false, "subcommand failed: " + ra.failed_step};
  const testing::PipelineRun rb = testing::run_pipeline(cli, b);
  if (rb.exit_code != 0) return {false, "subcommand failed on rerun: " + rb.failed_step};
  const auto ma = testing::pipeline_outputs(a);
  const auto mb = testing::pipeline_outputs(b);
  std::size_t differing = 0;
  std::string first;
  for (const auto& [name, text] : ma) {
    const auto it = mb.find(name);
    if (it == mb.end() || it->second != text) {
      if (differing++ == 0) first = name;
    }
  }
  const bool same_set = ma.size() == mb.size();
  return {differing == 0 && same_set && !ma.empty(),
          fmt("%zu output files over %zu subcommand runs; %zu differ%s", ma.size(),
              testing::pipeline_steps("").size(), differing, first.empty() ? "" : (" (first: " + first + ")").c_str())};
}

Outcome mollweide_equal_area() {
  double worst_example = 0;
  const auto check = [&](double yaw, double pitch, double x, double y) {
    const MollweidePoint p = mollweide_project(yaw, pitch);
    worst_example = std::max({worst_example, std::abs(p.x - x), std::abs(p.y - y)});
  };
  check(0, 0, 0, 0);
  check(0, kPi / 2, 0, std::sqrt(2.0));
  check(1.0, -kPi / 2, 0, -std::sqrt(2.0));
  check(kPi, 0, 2 * std::sqrt(2.0), 0);
  check(-kPi, 0, -2 * std::sqrt(2.0), 0);

  // Quarter-area chords of the ellipse: 2 t + sin 2t = pi / 2 at sqrt(2) sin t.
  double lo = 0, hi = kPi / 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (2 * mid + std::sin(2 * mid) < kPi / 2 ? lo : hi) = mid;
  }
  const double y_edge = std::sqrt(2.0) * std::sin(lo);
  const double x_edge = 2 * y_edge;
  const auto band = [](double v, double e) { return v < -e ? 0 : v < 0 ? 1 : v < e ? 2 : 3; };
  int by_y[4] = {}, by_x[4] = {};
  Rng rng(12);
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const MollweidePoint p = mollweide_project(rng.uniform(-kPi, kPi), std::asin(rng.uniform(-1, 1)));
    ++by_y[band(p.y, y_edge)];
    ++by_x[band(p.x, x_edge)];
  }
  double worst_density = 0;
  for (int k = 0; k < 4; ++k) {
    worst_density = std::max({worst_density, std::abs(by_y[k] / (n / 4.0) - 1), std::abs(by_x[k] / (n / 4.0) - 1)});
  }
  return {worst_example < 1e-9 && worst_density < 0.02,
          fmt("worst quartile density deviation %.2f%% (< 2%%); pole/identity examples max error %.1e (< 1e-9)",
              100 * worst_density, worst_example)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazekit acceptance suite"};
  std::vector<int> only;
  std::string cli = GAZEKIT_CLI;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--cli", cli, "Path to the gazekit binary");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"geometry exactness", geometry_exactness},
      {"label-pipeline oracle", label_oracle},
      {"control-experiment behavior", control_experiment_behavior},
      {"quantile calibration", quantile_calibration},
      {"uncertainty ranking", uncertainty_ranking},
      {"temporal benefit", temporal_benefit},
      {"yaw trend", yaw_trend},
      {"domain adaptation", domain_adaptation},
      {"gradient check", gradient_check},
      {"mean baseline sanity", mean_baseline_sanity},
      {"CLI determinism", [&] { return cli_determinism(cli); }},
      {"Mollweide equal area", mollweide_equal_area},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
