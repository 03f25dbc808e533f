#pragma once

#include <cstdint>
#include <vector>

#include "gazekit/adam.hpp"
#include "gazekit/loss.hpp"
#include "gazekit/model.hpp"
#include "gazekit/simulator.hpp"

namespace gazekit {

struct TrainConfig {
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 64;
  int epochs = 10;
  std::uint64_t seed = 1;
  LossKind loss_kind = LossKind::Pinball;
  int window = 7;
  /// Take every n-th window center from the training streams.
  int train_stride = 1;
  ModelDims dims;
  double dropout_rate = 0.2;
  int threads = 1;

  void validate() const;
  AdamConfig adam() const { return {lr, adam_beta1, adam_beta2, adam_eps}; }
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_mean_error_deg = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochMetrics> history;
  int best_epoch = -1;
};

struct LossAndGrad {
  double loss = 0;
  ModelParams grads;
};

Eigen::MatrixXd targets_of(const std::vector<const Window*>& windows);

/// Batch loss and exact gradients. Dropout is active when `dropout_rng` is set.
LossAndGrad backward(const ModelParams& params, const BatchInput& in, const Eigen::MatrixXd& targets,
                     LossKind loss, Rng* dropout_rng = nullptr);

LossResult evaluate_loss(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets, LossKind loss);

TrainResult train(const std::vector<Window>& train_set, const std::vector<Window>& val_set,
                  const TrainConfig& cfg, ModelKind kind);

TrainResult train(const DatasetSplit& data, const TrainConfig& cfg, ModelKind kind);

/// Deterministic predictions; sigma is set only for pinball models.
std::vector<Gaze> predict_windows(const ModelParams& params, const std::vector<Window>& windows,
                                  LossKind loss, int threads = 1);

/// Circular mean of yaw and arithmetic mean of pitch over the labels.
Gaze mean_baseline(const std::vector<Window>& train_set);
Gaze mean_baseline(const std::vector<FrameRecord>& train_set);

struct McDropoutResult {
  Gaze mean;
  /// sqrt of the mean per-angle variance over the stochastic passes.
  double sigma = 0;
};

McDropoutResult mc_dropout_uncertainty(const ModelParams& params, const Eigen::MatrixXd& window,
                                       int n, std::uint64_t seed);

/// Batched MC-dropout; the returned gazes carry the dropout sigma.
std::vector<Gaze> mc_dropout_predict(const ModelParams& params, const std::vector<Window>& windows,
                                     int n, std::uint64_t seed);

}  // namespace gazekit
