#include "gazekit/adapt.hpp"

#include <cmath>
#include <numeric>

#include "gazekit/adam.hpp"
#include "gazekit/loss.hpp"
#include "gazekit/train.hpp"

namespace gazekit {

namespace {

// log(1 + e^x) without overflow.
double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct DiscForward {
  Eigen::MatrixXd h;       // 16 x B after tanh
  Eigen::RowVectorXd z;    // logits
};

DiscForward disc_forward(const DiscriminatorParams& d, const Eigen::MatrixXd& x) {
  DiscForward f;
  f.h = ((d.l1.W * x).colwise() + d.l1.b).array().tanh();
  f.z = (d.l2.W * f.h).row(0).array() + d.l2.b(0);
  return f;
}

DiscriminatorParams disc_zeros_like(const DiscriminatorParams& d) {
  DiscriminatorParams z = d;
  for (auto& t : tensor_views(z)) t.setZero();
  return z;
}

void check_pair(const BatchInput& a, const BatchInput& b) {
  bool same = a.frames.size() == b.frames.size();
  for (std::size_t t = 0; same && t < a.frames.size(); ++t) {
    same = a.frames[t].rows() == b.frames[t].rows() && a.frames[t].cols() == b.frames[t].cols();
  }
  if (!same) throw Error(ErrorCode::ShapeMismatch, "symmetry pair differs in shape");
}

// Target for the first branch: the second branch's prediction, flipped.
Eigen::MatrixXd mirrored_targets(const Eigen::MatrixXd& out2) {
  Eigen::MatrixXd t(2, out2.cols());
  for (Eigen::Index j = 0; j < out2.cols(); ++j) {
    const Gaze m = mirror_gaze(Gaze{out2(0, j), out2(1, j), {}});
    t(0, j) = m.yaw;
    t(1, j) = m.pitch;
  }
  return t;
}

std::vector<const Window*> slice(const std::vector<Window>& ws, const std::vector<std::size_t>& order,
                                 std::size_t lo, std::size_t n) {
  std::vector<const Window*> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(&ws[order[(lo + i) % order.size()]]);
  return out;
}

BatchInput input_of(const std::vector<const Window*>& ws) {
  std::vector<const Eigen::MatrixXd*> frames;
  for (const Window* w : ws) frames.push_back(&w->frames);
  return batch_from_windows(frames);
}

}  // namespace

void AdaptConfig::validate() const {
  if (!(alpha > 0) || !(beta > 0)) throw Error(ErrorCode::ConfigError, "alpha and beta must be positive");
  if (!(lr > 0) || !(disc_lr > 0) || !(grad_reversal_scale >= 0)) {
    throw Error(ErrorCode::ConfigError, "learning rates must be positive and reversal scale >= 0");
  }
  if (epochs < 0 || batch_size < 1) throw Error(ErrorCode::ConfigError, "epochs >= 0 and batch_size >= 1");
}

void DiscriminatorParams::for_each(
    const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& f) {
  f("disc1.W", l1.W);
  f("disc1.b", l1.b);
  f("disc2.W", l2.W);
  f("disc2.b", l2.b);
}

DiscriminatorParams init_discriminator(int embed, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 31);
  const auto uniform = [&](int rows, int cols) {
    const double a = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
    return m;
  };
  DiscriminatorParams d;
  d.l1 = {uniform(kDiscriminatorHidden, embed), Eigen::VectorXd::Zero(kDiscriminatorHidden)};
  d.l2 = {uniform(1, kDiscriminatorHidden), Eigen::VectorXd::Zero(1)};
  return d;
}

Eigen::RowVectorXd discriminator_predict(const DiscriminatorParams& d, const Eigen::MatrixXd& feats) {
  const DiscForward f = disc_forward(d, feats);
  return f.z.unaryExpr([](double z) { return sigmoid(z); });
}

double discriminator_loss(const DiscriminatorParams& d, const Eigen::MatrixXd& feats_src,
                          const Eigen::MatrixXd& feats_tgt) {
  return discriminator_loss_grad(d, feats_src, feats_tgt).loss;
}

DiscriminatorGrad discriminator_loss_grad(const DiscriminatorParams& d, const Eigen::MatrixXd& feats_src,
                                          const Eigen::MatrixXd& feats_tgt) {
  if (feats_src.cols() == 0 || feats_tgt.cols() == 0) {
    throw Error(ErrorCode::EmptyBatch, "discriminator needs source and target samples");
  }
  if (feats_src.rows() != d.l1.W.cols() || feats_tgt.rows() != d.l1.W.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "feature size does not match the discriminator");
  }
  const Eigen::Index ns = feats_src.cols();
  const Eigen::Index n = ns + feats_tgt.cols();
  Eigen::MatrixXd x(feats_src.rows(), n);
  x << feats_src, feats_tgt;
  const DiscForward f = disc_forward(d, x);

  DiscriminatorGrad g;
  g.grads = disc_zeros_like(d);
  Eigen::RowVectorXd dz(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double label = j < ns ? 1.0 : 0.0;
    // BCE on the logit: label 1 costs log(1 + e^-z), label 0 costs log(1 + e^z).
    g.loss += label > 0 ? log1pexp(-f.z(j)) : log1pexp(f.z(j));
    dz(j) = (sigmoid(f.z(j)) - label) / static_cast<double>(n);
  }
  g.loss /= static_cast<double>(n);
  g.grads.l2.W = dz * f.h.transpose();
  g.grads.l2.b(0) = dz.sum();
  const Eigen::MatrixXd dh = (d.l2.W.transpose() * dz).array() * (1.0 - f.h.array().square());
  g.grads.l1.W = dh * x.transpose();
  g.grads.l1.b = dh.rowwise().sum();
  const Eigen::MatrixXd dx = d.l1.W.transpose() * dh;
  g.d_src = dx.leftCols(ns);
  g.d_tgt = dx.rightCols(n - ns);
  return g;
}

BatchInput mirror_batch(const BatchInput& in) {
  BatchInput out = in;
  for (Eigen::MatrixXd& f : out.frames) {
    if (f.rows() != feature::kCount) throw Error(ErrorCode::ShapeMismatch, "unexpected feature count");
    for (int c : feature::kYawChannels) f.row(c) = -f.row(c);
  }
  return out;
}

double symmetry_loss(const ModelParams& params, const BatchInput& x, const BatchInput& mirrored_x) {
  check_pair(x, mirrored_x);
  const Network net(params);
  const Eigen::MatrixXd out1 = net.forward(x).out;
  const Eigen::MatrixXd out2 = net.forward(mirrored_x).out;
  return pinball_batch(out1, mirrored_targets(out2)).value;
}

SymmetryGrad symmetry_loss_grad(const ModelParams& params, const BatchInput& x, const BatchInput& mirrored_x) {
  check_pair(x, mirrored_x);
  const Network net(params);
  Tape t1, t2;
  const Eigen::MatrixXd out1 = net.forward(x, {}, &t1).out;
  const Eigen::MatrixXd out2 = net.forward(mirrored_x, {}, &t2).out;
  const LossResult lr = pinball_batch(out1, mirrored_targets(out2));

  // The loss depends on the target only through the residual gt - pred, so
  // dL/dgt = -dL/dpred per angle. The flip negates yaw once more.
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(3, out2.cols());
  d2.row(0) = lr.grad.row(0);
  d2.row(1) = -lr.grad.row(1);

  SymmetryGrad g{lr.value, zeros_like(params)};
  net.backward(t1, lr.grad, g.grads);
  net.backward(t2, d2, g.grads);
  return g;
}

AdaptGradients adapt_gradients(const ModelParams& params, const DiscriminatorParams& disc,
                               const BatchInput& src, const Eigen::MatrixXd& src_targets,
                               const BatchInput& tgt, const AdaptConfig& cfg) {
  const Network net(params);
  Tape ts, tt;
  const ForwardResult fs = net.forward(src, {}, &ts);
  const ForwardResult ft = net.forward(tgt, {}, &tt);

  AdaptGradients g;
  const LossResult task = pinball_batch(fs.out, src_targets);
  g.task = cfg.alpha * task.value;
  g.g_task = zeros_like(params);
  net.backward(ts, cfg.alpha * task.grad, g.g_task);

  const DiscriminatorGrad dg = discriminator_loss_grad(disc, fs.center_embedding, ft.center_embedding);
  g.disc = dg.loss;
  g.g_disc = dg.grads;
  g.g_feat = zeros_like(params);
  net.backward(ts, Eigen::MatrixXd::Zero(3, fs.out.cols()), g.g_feat, &dg.d_src);
  net.backward(tt, Eigen::MatrixXd::Zero(3, ft.out.cols()), g.g_feat, &dg.d_tgt);

  SymmetryGrad sg = symmetry_loss_grad(params, tgt, mirror_batch(tgt));
  g.sym = cfg.beta * sg.loss;
  g.g_sym = std::move(sg.grads);
  for (auto& t : tensor_views(g.g_sym)) t *= cfg.beta;
  return g;
}

AdaptResult adapt_train(const ModelParams& params, const DatasetSplit& labeled_src,
                        const std::vector<FrameRecord>& unlabeled_tgt, const AdaptConfig& cfg) {
  const int w = params.dims.window;
  return adapt_train(params, make_windows(labeled_src.train, w), make_windows(unlabeled_tgt, w), cfg);
}

AdaptResult adapt_train(const ModelParams& params, const std::vector<Window>& src,
                        const std::vector<Window>& tgt, const AdaptConfig& cfg) {
  cfg.validate();
  if (src.empty() || tgt.empty()) throw Error(ErrorCode::EmptyDataset, "adaptation needs source and target windows");
  AdaptResult res;
  res.params = params;
  res.discriminator = init_discriminator(params.dims.embed, cfg.seed);
  AdamState<ModelParams> opt(res.params);
  AdamState<DiscriminatorParams> disc_opt(res.discriminator);
  const AdamConfig model_adam{cfg.lr, 0.9, 0.999, 1e-8};
  const AdamConfig disc_adam{cfg.disc_lr, 0.9, 0.999, 1e-8};

  Rng rng = Rng::stream(cfg.seed, 32);
  std::vector<std::size_t> src_order(src.size()), tgt_order(tgt.size());
  std::iota(src_order.begin(), src_order.end(), 0);
  std::iota(tgt_order.begin(), tgt_order.end(), 0);
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  // An epoch is one pass over the larger of the two sets; the smaller wraps.
  const std::size_t steps = (std::max(src.size(), tgt.size()) + b - 1) / b;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(src_order.begin(), src_order.end());
    rng.shuffle(tgt_order.begin(), tgt_order.end());
    AdaptStep mean;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto sb = slice(src, src_order, s * b, std::min(b, src.size()));
      const auto tb = slice(tgt, tgt_order, s * b, std::min(b, tgt.size()));
      AdaptGradients g = adapt_gradients(res.params, res.discriminator, input_of(sb), targets_of(sb),
                                         input_of(tb), cfg);
      auto total = tensor_views(g.g_task);
      auto sym = tensor_views(g.g_sym);
      auto feat = tensor_views(g.g_feat);
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += sym[i] - cfg.grad_reversal_scale * feat[i];
      adam_step(res.params, g.g_task, opt, model_adam);
      adam_step(res.discriminator, g.g_disc, disc_opt, disc_adam);

      const AdaptStep st{g.total(), g.task, g.disc, g.sym};
      res.steps.push_back(st);
      mean.total += st.total / static_cast<double>(steps);
      mean.task += st.task / static_cast<double>(steps);
      mean.disc += st.disc / static_cast<double>(steps);
      mean.sym += st.sym / static_cast<double>(steps);
    }
    res.epochs.push_back(mean);
  }
  return res;
}

}  // namespace gazekit
