// gazekit command-line interface.
//
//   gazekit [--seed N] [--threads N] <subcommand> [options]
//
// Exit status: 0 on success, 2 for configuration/usage errors, 1 otherwise.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gazekit/acquisition.hpp"
#include "gazekit/adapt.hpp"
#include "gazekit/attention.hpp"
#include "gazekit/checkpoint.hpp"
#include "gazekit/io.hpp"
#include "gazekit/metrics.hpp"
#include "gazekit/plot.hpp"
#include "gazekit/simulator.hpp"
#include "gazekit/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gazekit;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
};

std::string num(double v, const char* f = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Directory inputs resolve to the named split inside them.
std::string resolve_split(const std::string& path, const std::string& split) {
  return fs::is_directory(path) ? (fs::path(path) / (split + ".jsonl")).string() : path;
}

std::vector<FrameRecord> load_split(const std::string& path, const std::string& split) {
  const std::vector<FrameRecord> recs = read_jsonl(resolve_split(path, split));
  if (recs.empty()) throw Error(ErrorCode::EmptyDataset, "no frames in " + resolve_split(path, split));
  return recs;
}

SessionConfig optional_session_config(const std::string& path) {
  if (path.empty()) return {};
  json j = read_json_file(path);
  if (j.contains("session")) j = j["session"];
  return session_from_json(j);
}

std::vector<Gaze> gt_of(const std::vector<Window>& ws) {
  std::vector<Gaze> g;
  for (const Window& w : ws) g.push_back(w.gt);
  return g;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string config;
  std::string out;
};

int run_simulate(const SimulateOpts& o, const Globals& g) {
  json cfg = o.config.empty() ? json::object() : read_json_file(o.config);
  if (!cfg.is_object()) throw Error(ErrorCode::ConfigError, "simulate config must be an object");
  int n_sessions = 4;
  int first_session = 0;
  SplitRatios ratios;
  SessionConfig base;
  for (const auto& [k, v] : cfg.items()) {
    if (k == "sessions") n_sessions = v.get<int>();
    else if (k == "first_session_id") first_session = v.get<int>();
    else if (k == "split") {
      ratios.train = v.value("train", ratios.train);
      ratios.val = v.value("val", ratios.val);
      ratios.test = v.value("test", ratios.test);
    } else if (k == "session") base = session_from_json(v);
    else throw Error(ErrorCode::ConfigError, "unknown simulate key: " + k);
  }
  if (n_sessions < 1) throw Error(ErrorCode::ConfigError, "sessions must be >= 1");

  std::vector<std::vector<FrameRecord>> sessions;
  for (int i = 0; i < n_sessions; ++i) {
    SessionConfig c = base;
    c.session_id = first_session + i;
    c.seed = g.seed * 1000 + static_cast<std::uint64_t>(c.session_id);
    sessions.push_back(simulate_session(c));
  }
  const DatasetSplit split = export_dataset(sessions, ratios, o.out, g.seed);

  std::vector<Gaze> all;
  double label_err = 0;
  std::size_t labeled = 0;
  const RigConfig rig = base.rig();
  for (const auto& s : sessions) {
    for (const FrameRecord& f : s) {
      all.push_back(f.gt_gaze);
      try {
        label_err += angular_error(label_gaze(f.detection, f.marker, base.board, rig).spherical, f.gt_gaze);
        ++labeled;
      } catch (const Error&) {
      }
    }
  }
  export_distribution_map(all, (fs::path(o.out) / "gaze_distribution.svg").string());
  json summary = {{"sessions", n_sessions},
                  {"frames", all.size()},
                  {"train_frames", split.train.size()},
                  {"val_frames", split.val.size()},
                  {"test_frames", split.test.size()},
                  {"label_error_mean_deg", labeled ? label_err / static_cast<double>(labeled) : 0.0},
                  {"labeled_frames", labeled},
                  {"seed", g.seed},
                  {"session_config", to_json(base)}};
  write_text_file((fs::path(o.out) / "summary.json").string(), summary.dump(2) + "\n");
  std::cout << "simulated " << all.size() << " frames into " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- label

struct LabelOpts {
  std::string data;
  std::string config;
  std::string out;
  std::string summary;
};

int run_label(const LabelOpts& o, const Globals&) {
  const SessionConfig sc = optional_session_config(o.config);
  const RigConfig rig = sc.rig();
  const std::vector<FrameRecord> recs = load_split(o.data, "test");
  std::string csv = "session_id,subject_id,frame_index,label_yaw_deg,label_pitch_deg,gt_yaw_deg,gt_pitch_deg,error_deg\n";
  std::vector<double> errs;
  std::size_t failed = 0;
  for (const FrameRecord& f : recs) {
    GazeLabel lab;
    try {
      lab = label_gaze(f.detection, f.marker, sc.board, rig);
    } catch (const Error&) {
      ++failed;
      continue;
    }
    const double e = angular_error(lab.spherical, f.gt_gaze);
    errs.push_back(e);
    csv += std::to_string(f.session_id) + "," + std::to_string(f.subject_id) + "," + std::to_string(f.frame_index) +
           "," + num(rad2deg(lab.spherical.yaw)) + "," + num(rad2deg(lab.spherical.pitch)) + "," +
           num(rad2deg(f.gt_gaze.yaw)) + "," + num(rad2deg(f.gt_gaze.pitch)) + "," + num(e) + "\n";
  }
  write_text_file(o.out, csv);
  if (!o.summary.empty()) {
    std::vector<double> sorted = errs;
    std::sort(sorted.begin(), sorted.end());
    const auto pct = [&](double q) {
      return sorted.empty() ? 0.0 : sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))];
    };
    double mean = 0;
    for (double e : errs) mean += e;
    json s = {{"frames", recs.size()},
              {"labeled", errs.size()},
              {"failed", failed},
              {"mean_error_deg", errs.empty() ? 0.0 : mean / static_cast<double>(errs.size())},
              {"median_error_deg", pct(0.5)},
              {"p90_error_deg", pct(0.9)}};
    write_text_file(o.summary, s.dump(2) + "\n");
  }
  std::cout << "labeled " << errs.size() << " of " << recs.size() << " frames\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string model = "static";
  std::string loss = "pinball";
  std::string data;
  std::string out;
  std::string history;
  std::string config;
  int epochs = 15;
  double lr = 1e-3;
  int batch_size = 32;
  double dropout = -1;
  int stride = 2;
};

int run_train(const TrainOpts& o, const Globals& g) {
  const ModelKind kind = parse_model_kind(o.model);
  TrainConfig cfg;
  cfg.loss_kind = parse_loss_kind(o.loss);
  cfg.epochs = o.epochs;
  cfg.lr = o.lr;
  cfg.batch_size = o.batch_size;
  cfg.train_stride = o.stride;
  // Quantile heads are trained without dropout so sigma is fit to the
  // residuals seen at inference; dropout stays on for MC-dropout baselines.
  cfg.dropout_rate = o.dropout >= 0 ? o.dropout : (cfg.loss_kind == LossKind::Pinball ? 0.0 : 0.2);
  cfg.seed = g.seed;
  if (!o.config.empty()) cfg = train_config_from_json(read_json_file(o.config), cfg);
  cfg.threads = g.threads;
  cfg.validate();

  DatasetSplit data;
  data.train = load_split(o.data, "train");
  data.val = load_split(o.data, "val");
  const TrainResult r = train(data, cfg, kind);
  save_checkpoint(o.out, {r.params, cfg.loss_kind, cfg});
  if (!o.history.empty()) {
    std::string csv = "epoch,train_loss,val_loss,val_mean_error_deg\n";
    for (const EpochMetrics& m : r.history) {
      csv += std::to_string(m.epoch) + "," + num(m.train_loss, "%.8f") + "," + num(m.val_loss, "%.8f") + "," +
             num(m.val_mean_error_deg) + "\n";
    }
    write_text_file(o.history, csv);
  }
  std::cout << "trained " << to_string(kind) << "/" << to_string(cfg.loss_kind) << ", best epoch " << r.best_epoch
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string checkpoint;
  std::string data;
  std::string report;
  std::string json_report;
  std::string plots;
  int mc_passes = 0;
  double bin_width = 15.0;
};

json metrics_json(const MetricsReport& r, std::size_t n) {
  json j = {{"n", n},
            {"mean_err_all", r.errors.mean_all},
            {"mean_err_front180", r.errors.mean_front180},
            {"mean_err_frontfacing", r.errors.mean_frontfacing},
            {"n_front180", r.errors.n_front180},
            {"n_frontfacing", r.errors.n_frontfacing},
            {"uncert_spearman", r.uncert_spearman ? json(*r.uncert_spearman) : json(nullptr)}};
  if (r.coverage80) {
    j["coverage80"] = {{"per_angle", r.coverage80->per_angle},
                       {"yaw", r.coverage80->yaw},
                       {"pitch", r.coverage80->pitch},
                       {"joint", r.coverage80->joint}};
  } else {
    j["coverage80"] = nullptr;
  }
  return j;
}

int run_eval(const EvalOpts& o, const Globals& g) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const std::vector<Window> ws = make_windows(load_split(o.data, "test"), ck.params.dims.window);
  if (ws.empty()) throw Error(ErrorCode::EmptyDataset, "no complete windows in the evaluation data");
  const std::vector<Gaze> preds = o.mc_passes > 0 ? mc_dropout_predict(ck.params, ws, o.mc_passes, g.seed)
                                                  : predict_windows(ck.params, ws, ck.loss, g.threads);
  const std::vector<Gaze> gts = gt_of(ws);
  const MetricsReport rep = evaluate(preds, gts, o.bin_width);
  const std::string sigma_source = o.mc_passes > 0 ? "mc_dropout" : (ck.loss == LossKind::Pinball ? "pinball" : "none");

  const auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  std::string csv =
      "model,loss,sigma_source,n,mean_err_all,mean_err_front180,mean_err_frontfacing,uncert_spearman,"
      "coverage_per_angle,coverage_joint\n";
  csv += std::string(to_string(ck.params.kind)) + "," + to_string(ck.loss) + "," + sigma_source + "," +
         std::to_string(ws.size()) + "," + num(rep.errors.mean_all) + "," + num(rep.errors.mean_front180) + "," +
         num(rep.errors.mean_frontfacing) + "," + opt(rep.uncert_spearman) + "," +
         opt(rep.coverage80 ? std::optional<double>(rep.coverage80->per_angle) : std::nullopt) + "," +
         opt(rep.coverage80 ? std::optional<double>(rep.coverage80->joint) : std::nullopt) + "\n";
  write_text_file(o.report, csv);

  json j = metrics_json(rep, ws.size());
  j["model"] = to_string(ck.params.kind);
  j["loss"] = to_string(ck.loss);
  j["sigma_source"] = sigma_source;
  json bins = json::array();
  for (const YawBin& b : rep.yaw_table) {
    bins.push_back({{"center_deg", b.center_deg},
                    {"mean_error_deg", b.mean_error_deg},
                    {"mean_sigma_deg", b.mean_sigma_deg},
                    {"count", b.count}});
  }
  j["yaw_bins"] = bins;
  const std::string json_path =
      o.json_report.empty() ? fs::path(o.report).replace_extension(".json").string() : o.json_report;
  write_text_file(json_path, j.dump(2) + "\n");

  if (!o.plots.empty()) {
    const fs::path dir(o.plots);
    write_text_file((dir / "yaw_curve.csv").string(), yaw_curve_csv(rep.yaw_table));
    write_text_file((dir / "yaw_curve.svg").string(), yaw_curve_svg(rep.yaw_table));
    export_distribution_map(gts, (dir / "distribution_gt.svg").string());
    export_distribution_map(preds, (dir / "distribution_pred.svg").string());
  }
  std::cout << "mean angular error " << num(rep.errors.mean_all, "%.3f") << " deg over " << ws.size()
            << " windows\n";
  return 0;
}

// ---------------------------------------------------------------- adapt

struct AdaptOpts {
  std::string checkpoint;
  std::string src;
  std::string tgt;
  std::string out;
  std::string history;
  std::string report;
  AdaptConfig cfg;
};

int run_adapt(AdaptOpts o, const Globals& g) {
  o.cfg.seed = g.seed;
  o.cfg.validate();
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const int w = ck.params.dims.window;
  const std::vector<Window> src = make_windows(load_split(o.src, "train"), w, ck.train.train_stride);
  const std::vector<FrameRecord> tgt_recs = load_split(o.tgt, "train");
  const std::vector<Window> tgt = make_windows(tgt_recs, w, ck.train.train_stride);
  const AdaptResult res = adapt_train(ck.params, src, tgt, o.cfg);
  save_checkpoint(o.out, {res.params, ck.loss, ck.train});

  if (!o.history.empty()) {
    std::string csv = "epoch,total,task,disc,sym\n";
    for (std::size_t e = 0; e < res.epochs.size(); ++e) {
      const AdaptStep& s = res.epochs[e];
      csv += std::to_string(e) + "," + num(s.total, "%.8f") + "," + num(s.task, "%.8f") + "," +
             num(s.disc, "%.8f") + "," + num(s.sym, "%.8f") + "\n";
    }
    write_text_file(o.history, csv);
  }
  if (!o.report.empty()) {
    const auto err = [&](const ModelParams& p, const std::vector<Window>& ws) {
      return subset_errors(predict_windows(p, ws, ck.loss, g.threads), gt_of(ws)).mean_all;
    };
    // Labels on the target side are used for reporting only.
    const std::vector<Window> src_val = make_windows(load_split(o.src, "val"), w);
    json j = {{"source_val_error_before", err(ck.params, src_val)},
              {"source_val_error_after", err(res.params, src_val)},
              {"target_error_before", err(ck.params, tgt)},
              {"target_error_after", err(res.params, tgt)},
              {"alpha", o.cfg.alpha},
              {"beta", o.cfg.beta},
              {"epochs", o.cfg.epochs}};
    write_text_file(o.report, j.dump(2) + "\n");
  }
  std::cout << "adapted over " << res.steps.size() << " steps\n";
  return 0;
}

// ---------------------------------------------------------------- attention

struct AttentionOpts {
  std::string grid;
  std::string out;
  double noise_deg = -1;
  int shoppers = -1;
  int fixations = -1;
};

int run_attention(const AttentionOpts& o, const Globals& g) {
  const json j = o.grid.empty() ? json::object() : read_json_file(o.grid);
  AttentionGrid grid = grid_from_json(j);
  ShopperConfig sc;
  sc.shoppers = j.value("shoppers", sc.shoppers);
  sc.fixations_per_shopper = j.value("fixations_per_shopper", sc.fixations_per_shopper);
  sc.gaze_noise_deg = j.value("gaze_noise_deg", sc.gaze_noise_deg);
  if (o.noise_deg >= 0) sc.gaze_noise_deg = o.noise_deg;
  if (o.shoppers >= 0) sc.shoppers = o.shoppers;
  if (o.fixations >= 0) sc.fixations_per_shopper = o.fixations;

  const std::vector<ShopperSample> samples = simulate_shoppers(grid, sc, g.seed);
  std::vector<GazeRay> rays;
  std::vector<std::optional<Cell>> labels;
  for (const ShopperSample& s : samples) {
    rays.push_back(s.ray);
    labels.emplace_back(s.label);
  }
  const AttentionResult r = attention_map(rays, grid, labels);
  grid.counts = r.counts;

  const fs::path dir(o.out);
  std::string csv = "row,col,count\n";
  for (int rr = 0; rr < grid.rows; ++rr) {
    for (int c = 0; c < grid.cols; ++c) {
      csv += std::to_string(rr) + "," + std::to_string(c) + "," + num(r.counts(rr, c), "%.0f") + "\n";
    }
  }
  write_text_file((dir / "heatmap.csv").string(), csv);
  write_text_file((dir / "heatmap.svg").string(), heatmap_svg(r.counts, "shelf attention (fixation counts)"));
  json rep = {{"rays", rays.size()},     {"hits", r.hits},
              {"misses", r.misses},      {"accuracy", r.accuracy},
              {"gaze_noise_deg", sc.gaze_noise_deg}, {"grid", to_json(grid)}};
  write_text_file((dir / "attention.json").string(), rep.dump(2) + "\n");
  std::cout << "attention accuracy " << num(r.accuracy, "%.3f") << " over " << rays.size() << " fixations\n";
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string out;
  std::string control_out;
  int control_runs = 3;
};

int run_report(const ReportOpts& o, const Globals& g) {
  if (o.inputs.empty() && o.control_out.empty()) {
    throw Error(ErrorCode::ConfigError, "report needs --inputs and/or --control-out");
  }
  if (!o.inputs.empty()) {
    if (o.out.empty()) throw Error(ErrorCode::ConfigError, "--out is required with --inputs");
    std::string csv =
        "name,model,loss,sigma_source,n,mean_err_all,mean_err_front180,mean_err_frontfacing,uncert_spearman,"
        "coverage_per_angle\n";
    for (const std::string& path : o.inputs) {
      const json j = read_json_file(path);
      const auto f = [&](const char* k) { return j.contains(k) && j[k].is_number() ? num(j[k].get<double>()) : ""; };
      const std::string cov =
          j.contains("coverage80") && j["coverage80"].is_object() ? num(j["coverage80"]["per_angle"].get<double>()) : "";
      csv += fs::path(path).stem().string() + "," + j.value("model", "") + "," + j.value("loss", "") + "," +
             j.value("sigma_source", "") + "," + std::to_string(j.value("n", 0)) + "," + f("mean_err_all") + "," +
             f("mean_err_front180") + "," + f("mean_err_frontfacing") + "," + f("uncert_spearman") + "," + cov + "\n";
    }
    write_text_file(o.out, csv);
  }
  if (!o.control_out.empty()) {
    SessionConfig c;
    c.seed = g.seed;
    const ControlReport r = control_experiment(c, o.control_runs);
    std::string csv = "noise_source,mean_deg,median_deg,p90_deg,frames\n";
    const auto row = [&](const char* name, const LabelErrorStats& s) {
      csv += std::string(name) + "," + num(s.mean_deg) + "," + num(s.median_deg) + "," + num(s.p90_deg) + "," +
             std::to_string(s.frames) + "\n";
    };
    row("combined", r.combined);
    row("marker_rotation", r.marker_rotation_only);
    row("marker_translation", r.marker_translation_only);
    row("keypoints", r.keypoint_only);
    write_text_file(o.control_out, csv);
  }
  std::cout << "report written\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gazekit: physically unconstrained gaze estimation toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for batched inference")->check(CLI::PositiveNumber);

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "Simulate capture sessions and export a split dataset");
  s_sim->add_option("--config", sim.config, "Simulation config JSON");
  s_sim->add_option("--out", sim.out, "Output directory")->required();

  LabelOpts lab;
  auto* s_lab = app.add_subcommand("label", "Recover gaze labels from stored detections");
  s_lab->add_option("--data", lab.data, "Frames JSONL (or dataset dir: test split)")->required();
  s_lab->add_option("--config", lab.config, "Session config for rig geometry");
  s_lab->add_option("--out", lab.out, "Per-frame label CSV")->required();
  s_lab->add_option("--summary", lab.summary, "Label error summary JSON");

  TrainOpts tr;
  auto* s_tr = app.add_subcommand("train", "Train a gaze regressor");
  s_tr->add_option("--model", tr.model, "static | trn | lstm")->check(CLI::IsMember({"static", "trn", "lstm"}));
  s_tr->add_option("--loss", tr.loss, "pinball | mse")->check(CLI::IsMember({"pinball", "mse"}));
  s_tr->add_option("--data", tr.data, "Dataset directory with train/val JSONL")->required();
  s_tr->add_option("--out", tr.out, "Checkpoint path")->required();
  s_tr->add_option("--history", tr.history, "Per-epoch CSV");
  s_tr->add_option("--config", tr.config, "Train config JSON (overrides flags)");
  s_tr->add_option("--epochs", tr.epochs)->capture_default_str();
  s_tr->add_option("--lr", tr.lr)->capture_default_str();
  s_tr->add_option("--batch-size", tr.batch_size)->capture_default_str();
  s_tr->add_option("--dropout", tr.dropout, "Head dropout (default 0 for pinball, 0.2 for mse)");
  s_tr->add_option("--stride", tr.stride, "Training window stride")->capture_default_str();

  EvalOpts ev;
  auto* s_ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  s_ev->add_option("--checkpoint", ev.checkpoint)->required();
  s_ev->add_option("--data", ev.data, "Frames JSONL (or dataset dir: test split)")->required();
  s_ev->add_option("--report", ev.report, "Metrics CSV")->required();
  s_ev->add_option("--json", ev.json_report, "Metrics JSON (default: report path with .json)");
  s_ev->add_option("--plots", ev.plots, "Directory for SVG plots and the yaw table");
  s_ev->add_option("--mc-passes", ev.mc_passes, "Use MC-dropout sigma with this many passes");
  s_ev->add_option("--bin-width", ev.bin_width, "Yaw bin width, degrees")->capture_default_str();

  AdaptOpts ad;
  auto* s_ad = app.add_subcommand("adapt", "Domain-adapt a checkpoint to unlabeled target data");
  s_ad->add_option("--checkpoint", ad.checkpoint)->required();
  s_ad->add_option("--src", ad.src, "Labeled source dataset directory")->required();
  s_ad->add_option("--tgt", ad.tgt, "Target frames JSONL or dataset directory (train split)")->required();
  s_ad->add_option("--out", ad.out, "Adapted checkpoint path")->required();
  s_ad->add_option("--history", ad.history, "Per-epoch loss CSV");
  s_ad->add_option("--report", ad.report, "Before/after error JSON");
  s_ad->add_option("--alpha", ad.cfg.alpha)->capture_default_str();
  s_ad->add_option("--beta", ad.cfg.beta)->capture_default_str();
  s_ad->add_option("--epochs", ad.cfg.epochs)->capture_default_str();
  s_ad->add_option("--lr", ad.cfg.lr)->capture_default_str();
  s_ad->add_option("--disc-lr", ad.cfg.disc_lr)->capture_default_str();
  s_ad->add_option("--reversal", ad.cfg.grad_reversal_scale, "Gradient reversal scale")->capture_default_str();
  s_ad->add_option("--batch-size", ad.cfg.batch_size)->capture_default_str();

  AttentionOpts at;
  auto* s_at = app.add_subcommand("attention", "Shelf attention heatmap from simulated shoppers");
  s_at->add_option("--grid", at.grid, "Grid JSON");
  s_at->add_option("--out", at.out, "Output directory")->required();
  s_at->add_option("--noise-deg", at.noise_deg, "Gaze noise, degrees");
  s_at->add_option("--shoppers", at.shoppers);
  s_at->add_option("--fixations", at.fixations, "Fixations per shopper");

  ReportOpts rp;
  auto* s_rp = app.add_subcommand("report", "Aggregate eval reports and run the label-noise control");
  s_rp->add_option("--inputs", rp.inputs, "Eval JSON reports");
  s_rp->add_option("--out", rp.out, "Aggregated CSV");
  s_rp->add_option("--control-out", rp.control_out, "Label-noise control CSV");
  s_rp->add_option("--control-runs", rp.control_runs)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s_sim) return run_simulate(sim, g);
    if (*s_lab) return run_label(lab, g);
    if (*s_tr) return run_train(tr, g);
    if (*s_ev) return run_eval(ev, g);
    if (*s_ad) return run_adapt(ad, g);
    if (*s_at) return run_attention(at, g);
    if (*s_rp) return run_report(rp, g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
