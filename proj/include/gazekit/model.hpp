#pragma once

// Gaze regressors over per-frame appearance features.
//
// All three kinds share a per-frame feature MLP (F -> H -> D, tanh):
//   static: center-frame embedding -> dense head
//   trn:    embeddings of centered sub-windows {1, 3, 7} concatenated, one
//           dense head per sub-window, outputs averaged
//   lstm:   two stacked bidirectional gated recurrent layers; the forward
//           and backward final states of the top layer feed the head
// Every head emits (yaw, pitch, sigma_raw) with sigma = softplus(sigma_raw).
// Tensors are batched column-wise: one column per sample.

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/rng.hpp"

namespace gazekit {

enum class ModelKind { Static, Trn, Lstm };
enum class LossKind { Pinball, Mse };

const char* to_string(ModelKind k);
const char* to_string(LossKind k);
ModelKind parse_model_kind(const std::string& s);
LossKind parse_loss_kind(const std::string& s);

struct ModelDims {
  int features = 8;
  int hidden = 64;
  int embed = 32;
  int state = 32;
  int layers = 2;
  int window = 7;
};

/// y = W x + b
struct Dense {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

/// Update/reset gated cell: z, r gates; candidate c = tanh(Wh x + Uh (r*h) + bh);
/// h' = (1 - z) * h + z * c.
struct GruCell {
  Eigen::MatrixXd Wz, Uz, Wr, Ur, Wh, Uh;
  Eigen::VectorXd bz, br, bh;
};

struct ModelParams {
  ModelKind kind = ModelKind::Static;
  ModelDims dims;
  double dropout_rate = 0.2;

  Dense mlp1;
  Dense mlp2;
  std::vector<GruCell> fwd;
  std::vector<GruCell> bwd;
  Dense head;
  std::vector<Dense> trn_heads;

  /// Visits every weight array with a stable name, in a fixed order.
  void for_each(const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& f);
  void for_each(
      const std::function<void(const std::string&, const Eigen::Ref<const Eigen::MatrixXd>&)>& f) const;

  std::size_t parameter_count() const;
};

/// Sub-window sizes aggregated by the trn model.
const std::vector<int>& trn_windows();

/// Seeded uniform(+-1/sqrt(fan_in)) weights, zero biases.
ModelParams init_model(ModelKind kind, const ModelDims& dims, double dropout_rate, std::uint64_t seed);

/// Same structure, all zeros.
ModelParams zeros_like(const ModelParams& p);

/// Throws ShapeMismatch unless `a` and `b` have identical structure.
void check_same_shape(const ModelParams& a, const ModelParams& b);

/// Batched input: frames[t] is features x batch.
struct BatchInput {
  std::vector<Eigen::MatrixXd> frames;
  Eigen::Index batch() const { return frames.empty() ? 0 : frames.front().cols(); }
};

struct ForwardOptions {
  /// When set, dropout is active at the head input with masks drawn here.
  Rng* dropout_rng = nullptr;
};

struct Tape;

/// Rows: yaw, pitch, sigma (after softplus). Columns: samples.
struct ForwardResult {
  Eigen::MatrixXd out;
  /// Center-frame embedding (embed x batch), the backbone output.
  Eigen::MatrixXd center_embedding;
};

class Network {
 public:
  explicit Network(const ModelParams& params) : p_(params) {}

  ForwardResult forward(const BatchInput& in, const ForwardOptions& opts = {}, Tape* tape = nullptr) const;

  /// Accumulates into `grads` given dLoss/dOut (3 x batch, sigma row w.r.t.
  /// post-softplus sigma). `d_center_embedding`, when given, is an extra
  /// gradient on the center-frame embedding.
  void backward(const Tape& tape, const Eigen::MatrixXd& d_out, ModelParams& grads,
                const Eigen::MatrixXd* d_center_embedding = nullptr) const;

 private:
  const ModelParams& p_;
};

/// Opaque activations cache for Network::backward.
struct Tape {
  struct DenseTanh {
    Eigen::MatrixXd x, h1, e;
  };
  struct CellStep {
    Eigen::MatrixXd x, h, z, r, c;
  };
  struct Layer {
    std::vector<CellStep> fwd, bwd;  // bwd[t] is the step that consumed input t
  };
  std::vector<DenseTanh> frames;
  std::vector<Layer> layers;
  std::vector<Eigen::MatrixXd> head_inputs;  // after dropout
  std::vector<Eigen::MatrixXd> head_masks;   // empty when dropout is off
  std::vector<Eigen::MatrixXd> head_raw;     // pre-activation head outputs
  int center = 0;
};

/// Input validation shared by the forward entry points.
void check_input(const ModelParams& p, const BatchInput& in);

Gaze forward_static(const ModelParams& p, const Eigen::VectorXd& x, LossKind loss = LossKind::Pinball);
Gaze forward_sequence(const ModelParams& p, const Eigen::MatrixXd& window, LossKind loss = LossKind::Pinball);
Gaze forward_trn(const ModelParams& p, const Eigen::MatrixXd& window, LossKind loss = LossKind::Pinball);

/// Dispatches on p.kind; `window` is frames x features.
Gaze predict(const ModelParams& p, const Eigen::MatrixXd& window, LossKind loss = LossKind::Pinball);

BatchInput batch_from_windows(const std::vector<const Eigen::MatrixXd*>& windows);

double softplus(double x);
double sigmoid(double x);

}  // namespace gazekit
