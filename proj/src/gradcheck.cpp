#include "gazekit/gradcheck.hpp"

#include "gazekit/train.hpp"

namespace gazekit {

namespace {

BatchInput select_columns(const BatchInput& in, const std::vector<Eigen::Index>& keep) {
  BatchInput out;
  for (const Eigen::MatrixXd& f : in.frames) {
    Eigen::MatrixXd g(f.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = f.col(keep[k]);
    out.frames.push_back(std::move(g));
  }
  return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& keep) {
  Eigen::MatrixXd g(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = m.col(keep[k]);
  return g;
}

}  // namespace

RegressorCheck check_regressor_gradients(const ModelParams& params, const BatchInput& in,
                                         const Eigen::MatrixXd& targets, LossKind loss,
                                         const RegressorCheckOptions& opts) {
  ModelParams p = params;
  const auto run = [&](Tape* tape) {
    Rng rng(opts.dropout_seed);
    ForwardOptions fo;
    if (opts.with_dropout) fo.dropout_rng = &rng;
    return Network(p).forward(in, fo, tape);
  };

  // Drop samples whose outputs sit near a non-differentiable point.
  std::vector<Eigen::Index> keep;
  if (loss == LossKind::Pinball) {
    const Eigen::VectorXd margins = pinball_kink_margins(run(nullptr).out, targets);
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
      if (margins(j) > opts.kink_margin) keep.push_back(j);
    }
  } else {
    for (Eigen::Index j = 0; j < targets.cols(); ++j) keep.push_back(j);
  }
  RegressorCheck rc;
  rc.samples = static_cast<Eigen::Index>(keep.size());
  if (keep.empty()) return rc;
  const BatchInput sub = select_columns(in, keep);
  const Eigen::MatrixXd sub_targets = select_columns(targets, keep);

  const auto run_sub = [&](Tape* tape) {
    Rng rng(opts.dropout_seed);
    ForwardOptions fo;
    if (opts.with_dropout) fo.dropout_rng = &rng;
    return Network(p).forward(sub, fo, tape);
  };
  Tape tape;
  const ForwardResult fr = run_sub(&tape);
  ModelParams grads = zeros_like(p);
  Network(p).backward(tape, evaluate_loss(fr.out, sub_targets, loss).grad, grads);
  rc.result = check_gradients<ModelParams>(
      p, grads, [&] { return evaluate_loss(run_sub(nullptr).out, sub_targets, loss).value; }, opts.eps);
  return rc;
}

}  // namespace gazekit
