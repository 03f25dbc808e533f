#include "gazekit/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace gazekit {

namespace {

constexpr Eigen::Index kPredictChunk = 256;

std::vector<const Window*> pointers(const std::vector<Window>& ws) {
  std::vector<const Window*> out;
  out.reserve(ws.size());
  for (const Window& w : ws) out.push_back(&w);
  return out;
}

BatchInput input_of(const std::vector<const Window*>& ws) {
  std::vector<const Eigen::MatrixXd*> frames;
  frames.reserve(ws.size());
  for (const Window* w : ws) frames.push_back(&w->frames);
  return batch_from_windows(frames);
}

Eigen::MatrixXd predict_matrix(const ModelParams& params, const std::vector<Window>& ws, int threads) {
  const auto n = static_cast<Eigen::Index>(ws.size());
  Eigen::MatrixXd out(3, n);
  const Eigen::Index chunks = (n + kPredictChunk - 1) / kPredictChunk;
  const auto run = [&](Eigen::Index c) {
    const Eigen::Index lo = c * kPredictChunk;
    const Eigen::Index hi = std::min(n, lo + kPredictChunk);
    std::vector<const Window*> part;
    for (Eigen::Index i = lo; i < hi; ++i) part.push_back(&ws[static_cast<std::size_t>(i)]);
    out.middleCols(lo, hi - lo) = Network(params).forward(input_of(part)).out;
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(chunks)));
  if (workers == 1) {
    for (Eigen::Index c = 0; c < chunks; ++c) run(c);
  } else {
    // Chunks are independent; the result does not depend on the worker count.
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (Eigen::Index c = w; c < chunks; c += workers) run(c);
      });
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0)) throw Error(ErrorCode::ConfigError, "lr must be positive");
  if (window < 1 || window % 2 == 0) throw Error(ErrorCode::ConfigError, "window must be odd");
  if (batch_size < 1 || epochs < 0 || train_stride < 1) {
    throw Error(ErrorCode::ConfigError, "batch_size/epochs/train_stride out of range");
  }
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0)) {
    throw Error(ErrorCode::ConfigError, "Adam hyperparameters out of range");
  }
}

Eigen::MatrixXd targets_of(const std::vector<const Window*>& ws) {
  Eigen::MatrixXd t(2, static_cast<Eigen::Index>(ws.size()));
  for (std::size_t i = 0; i < ws.size(); ++i) {
    t(0, static_cast<Eigen::Index>(i)) = ws[i]->gt.yaw;
    t(1, static_cast<Eigen::Index>(i)) = ws[i]->gt.pitch;
  }
  return t;
}

LossResult evaluate_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets, LossKind loss) {
  return loss == LossKind::Pinball ? pinball_batch(out, targets) : mse_batch(out, targets);
}

LossAndGrad backward(const ModelParams& params, const BatchInput& in, const Eigen::MatrixXd& targets,
                     LossKind loss, Rng* dropout_rng) {
  const Network net(params);
  Tape tape;
  ForwardOptions opts;
  opts.dropout_rng = dropout_rng;
  const ForwardResult fr = net.forward(in, opts, &tape);
  const LossResult lr = evaluate_loss(fr.out, targets, loss);
  LossAndGrad res{lr.value, zeros_like(params)};
  net.backward(tape, lr.grad, res.grads);
  return res;
}

TrainResult train(const DatasetSplit& data, const TrainConfig& cfg, ModelKind kind) {
  return train(make_windows(data.train, cfg.window, cfg.train_stride), make_windows(data.val, cfg.window),
               cfg, kind);
}

TrainResult train(const std::vector<Window>& train_set, const std::vector<Window>& val_set,
                  const TrainConfig& cfg, ModelKind kind) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) throw Error(ErrorCode::EmptyDataset, "empty train or val set");
  ModelDims dims = cfg.dims;
  dims.window = cfg.window;
  TrainResult result;
  result.params = init_model(kind, dims, cfg.dropout_rate, cfg.seed);
  AdamState<ModelParams> opt(result.params);
  Rng shuffle_rng = Rng::stream(cfg.seed, 11);
  Rng dropout_rng = Rng::stream(cfg.seed, 12);

  const auto val_ptrs = pointers(val_set);
  const Eigen::MatrixXd val_targets = targets_of(val_ptrs);
  double best = std::numeric_limits<double>::infinity();
  ModelParams best_params = result.params;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Window*> batch;
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(&train_set[order[i]]);
      LossAndGrad lg = backward(result.params, input_of(batch), targets_of(batch), cfg.loss_kind, &dropout_rng);
      adam_step(result.params, lg.grads, opt, cfg.adam());
      loss_sum += lg.loss * static_cast<double>(hi - lo);
      seen += hi - lo;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(seen);
    const Eigen::MatrixXd out = predict_matrix(result.params, val_set, cfg.threads);
    m.val_loss = evaluate_loss(out, val_targets, cfg.loss_kind).value;
    double err = 0;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      err += angular_error(Gaze{out(0, j), out(1, j), {}}, val_set[static_cast<std::size_t>(j)].gt);
    }
    m.val_mean_error_deg = err / static_cast<double>(out.cols());
    result.history.push_back(m);
    if (m.val_mean_error_deg < best) {
      best = m.val_mean_error_deg;
      best_params = result.params;
      result.best_epoch = epoch;
    }
  }
  if (cfg.epochs > 0) result.params = std::move(best_params);
  return result;
}

std::vector<Gaze> predict_windows(const ModelParams& params, const std::vector<Window>& windows,
                                  LossKind loss, int threads) {
  std::vector<Gaze> preds;
  if (windows.empty()) return preds;
  const Eigen::MatrixXd out = predict_matrix(params, windows, threads);
  preds.reserve(windows.size());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    Gaze g{out(0, j), out(1, j), {}};
    if (loss == LossKind::Pinball) g.sigma = out(2, j);
    preds.push_back(g);
  }
  return preds;
}

namespace {

template <typename Range, typename Get>
Gaze circular_mean(const Range& items, Get get) {
  if (items.empty()) throw Error(ErrorCode::EmptyDataset, "mean baseline needs labels");
  double s = 0, c = 0, p = 0;
  for (const auto& it : items) {
    const Gaze g = get(it);
    s += std::sin(g.yaw);
    c += std::cos(g.yaw);
    p += g.pitch;
  }
  Gaze m;
  m.yaw = wrap_angle(std::atan2(s, c));
  m.pitch = p / static_cast<double>(items.size());
  return m;
}

}  // namespace

Gaze mean_baseline(const std::vector<Window>& train_set) {
  return circular_mean(train_set, [](const Window& w) { return w.gt; });
}

Gaze mean_baseline(const std::vector<FrameRecord>& train_set) {
  return circular_mean(train_set, [](const FrameRecord& f) { return f.gt_gaze; });
}

std::vector<Gaze> mc_dropout_predict(const ModelParams& params, const std::vector<Window>& windows,
                                     int n, std::uint64_t seed) {
  if (!(params.dropout_rate > 0)) throw Error(ErrorCode::DropoutDisabled, "model has no dropout");
  if (n < 1) throw Error(ErrorCode::ConfigError, "need at least one pass");
  std::vector<Gaze> result;
  if (windows.empty()) return result;
  const auto ptrs = pointers(windows);
  const BatchInput in = input_of(ptrs);
  const Network net(params);
  Rng rng = Rng::stream(seed, 13);
  ForwardOptions opts;
  opts.dropout_rng = &rng;
  std::vector<Eigen::MatrixXd> passes;
  for (int k = 0; k < n; ++k) passes.push_back(net.forward(in, opts).out);

  const Eigen::Index B = in.batch();
  result.reserve(windows.size());
  for (Eigen::Index j = 0; j < B; ++j) {
    // Yaw is averaged as offsets from the first pass so the mean stays on
    // the correct side of the +-pi seam.
    const double ref = passes.front()(0, j);
    double off = 0, p = 0;
    for (const auto& o : passes) {
      off += wrap_angle(o(0, j) - ref);
      p += o(1, j);
    }
    const double yaw = ref + off / n;
    const double pitch = p / n;
    double vy = 0, vp = 0;
    for (const auto& o : passes) {
      const double dy = wrap_angle(o(0, j) - yaw);
      const double dp = o(1, j) - pitch;
      vy += dy * dy;
      vp += dp * dp;
    }
    // Population variance: a single pass has zero spread.
    vy /= n;
    vp /= n;
    result.push_back(Gaze{wrap_angle(yaw), pitch, std::sqrt((vy + vp) / 2.0)});
  }
  return result;
}

McDropoutResult mc_dropout_uncertainty(const ModelParams& params, const Eigen::MatrixXd& window, int n,
                                       std::uint64_t seed) {
  Window w;
  w.frames = window;
  const Gaze g = mc_dropout_predict(params, {w}, n, seed).front();
  McDropoutResult r;
  r.mean = Gaze{g.yaw, g.pitch, {}};
  r.sigma = *g.sigma;
  return r;
}

}  // namespace gazekit
