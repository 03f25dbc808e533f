#pragma once

// Self-supervised domain adaptation.
//
// Fine-tunes a trained regressor on mixed batches of labeled source windows
// and unlabeled target windows with
//   L = alpha * L_tau(source) + L_D + beta * L_S(target)
// where L_D is the cross-entropy of a small discriminator that tells source
// from target center-frame embeddings, and L_S is the left-right symmetry
// loss. The discriminator descends L_D; the feature extractor receives the
// reversed (negated, scaled) L_D gradient.

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "gazekit/model.hpp"
#include "gazekit/simulator.hpp"

namespace gazekit {

struct AdaptConfig {
  double alpha = 60.0;
  double beta = 3.0;
  /// Regressor learning rate during fine-tuning.
  double lr = 3e-4;
  double disc_lr = 1e-4;
  double grad_reversal_scale = 3.0;
  int epochs = 3;
  int batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

/// embed -> 16 (tanh) -> 1 (sigmoid). l2 emits the logit.
struct DiscriminatorParams {
  Dense l1;
  Dense l2;

  void for_each(const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& f);
};

inline constexpr int kDiscriminatorHidden = 16;

DiscriminatorParams init_discriminator(int embed, std::uint64_t seed);

/// Probability of "source" for each column of `feats`.
Eigen::RowVectorXd discriminator_predict(const DiscriminatorParams& d, const Eigen::MatrixXd& feats);

/// Mean binary cross-entropy over both batches, source labeled 1 and target 0.
double discriminator_loss(const DiscriminatorParams& d, const Eigen::MatrixXd& feats_src,
                          const Eigen::MatrixXd& feats_tgt);

struct DiscriminatorGrad {
  double loss = 0;
  DiscriminatorParams grads;
  Eigen::MatrixXd d_src;
  Eigen::MatrixXd d_tgt;
};

DiscriminatorGrad discriminator_loss_grad(const DiscriminatorParams& d, const Eigen::MatrixXd& feats_src,
                                          const Eigen::MatrixXd& feats_tgt);

/// Feature-space horizontal flip of a batch (yaw-carrying channels negated).
BatchInput mirror_batch(const BatchInput& in);

/// Pinball loss of pred(X) against the mirrored pred(mirrored_X), which is
/// treated as the target. Throws ShapeMismatch when the inputs differ in shape.
double symmetry_loss(const ModelParams& params, const BatchInput& x, const BatchInput& mirrored_x);

struct SymmetryGrad {
  double loss = 0;
  ModelParams grads;
};

/// Gradient of symmetry_loss through both branches.
SymmetryGrad symmetry_loss_grad(const ModelParams& params, const BatchInput& x, const BatchInput& mirrored_x);

/// Weighted components of the objective on one mixed batch and their exact
/// gradients. The update applies g_task + g_sym - scale * g_feat to the
/// regressor and g_disc to the discriminator.
struct AdaptGradients {
  double task = 0;  // alpha * L_tau
  double disc = 0;  // L_D
  double sym = 0;   // beta * L_S
  ModelParams g_task;
  ModelParams g_sym;
  ModelParams g_feat;  // d L_D / d regressor params
  DiscriminatorParams g_disc;

  double total() const { return task + disc + sym; }
};

AdaptGradients adapt_gradients(const ModelParams& params, const DiscriminatorParams& disc,
                               const BatchInput& src, const Eigen::MatrixXd& src_targets,
                               const BatchInput& tgt, const AdaptConfig& cfg);

struct AdaptStep {
  double total = 0;
  double task = 0;
  double disc = 0;
  double sym = 0;
};

struct AdaptResult {
  ModelParams params;
  DiscriminatorParams discriminator;
  /// One entry per optimizer step.
  std::vector<AdaptStep> steps;
  /// Mean of each component per epoch.
  std::vector<AdaptStep> epochs;
};

/// Source windows come from `labeled_src.train`. Throws EmptyDataset when
/// either side yields no windows.
AdaptResult adapt_train(const ModelParams& params, const DatasetSplit& labeled_src,
                        const std::vector<FrameRecord>& unlabeled_tgt, const AdaptConfig& cfg);

AdaptResult adapt_train(const ModelParams& params, const std::vector<Window>& src,
                        const std::vector<Window>& tgt, const AdaptConfig& cfg);

}  // namespace gazekit
