#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gazekit/gradcheck.hpp"
#include "gazekit/train.hpp"

using namespace gazekit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

ModelDims small_dims() {
  ModelDims d;
  d.hidden = 6;
  d.embed = 5;
  d.state = 4;
  return d;
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

// Plain re-implementation of the frame embedding.
VectorXd embed(const ModelParams& p, const VectorXd& x) {
  const VectorXd h = (p.mlp1.W * x + p.mlp1.b).array().tanh();
  return (p.mlp2.W * h + p.mlp2.b).array().tanh();
}

}  // namespace

TEST_CASE("entry points reject wrongly shaped inputs") {
  const ModelParams st = init_model(ModelKind::Static, small_dims(), 0.2, 1);
  const ModelParams ls = init_model(ModelKind::Lstm, small_dims(), 0.2, 1);
  const ModelParams tr = init_model(ModelKind::Trn, small_dims(), 0.2, 1);
  CHECK(code_of([&] { forward_static(st, VectorXd::Zero(7)); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { forward_static(ls, VectorXd::Zero(8)); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { forward_sequence(ls, MatrixXd::Zero(6, 8)); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { forward_sequence(ls, MatrixXd::Zero(7, 9)); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { forward_trn(tr, MatrixXd::Zero(5, 8)); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { forward_trn(st, MatrixXd::Zero(7, 8)); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { init_model(ModelKind::Lstm, ModelDims{8, 4, 4, 4, 2, 6}, 0.2, 1); }) ==
        ErrorCode::ConfigError);
}

TEST_CASE("static outputs: positive sigma, zero head, determinism") {
  Rng rng(4);
  ModelParams p = init_model(ModelKind::Static, {}, 0.2, 11);
  for (int i = 0; i < 200; ++i) {
    const Gaze g = forward_static(p, random_matrix(rng, 8, 1) * 3.0);
    REQUIRE(g.sigma.has_value());
    CHECK(*g.sigma > 0);
  }
  const VectorXd x = random_matrix(rng, 8, 1);
  const Gaze a = forward_static(p, x);
  const Gaze b = forward_static(init_model(ModelKind::Static, {}, 0.2, 11), x);
  CHECK(a.yaw == b.yaw);
  CHECK(a.pitch == b.pitch);
  CHECK(*a.sigma == *b.sigma);
  CHECK_FALSE(forward_static(p, x, LossKind::Mse).sigma.has_value());

  p.head.W.setZero();
  p.head.b.setZero();
  const Gaze z = forward_static(p, x);
  CHECK(z.yaw == 0.0);
  CHECK(z.pitch == 0.0);
  CHECK(*z.sigma == doctest::Approx(std::log(2.0)));
}

TEST_CASE("identical frames give finite outputs for every kind") {
  Rng rng(2);
  const VectorXd x = random_matrix(rng, 8, 1);
  const MatrixXd w = x.transpose().replicate(7, 1);
  for (ModelKind k : {ModelKind::Static, ModelKind::Trn, ModelKind::Lstm}) {
    const Gaze g = predict(init_model(k, {}, 0.2, 5), w);
    CHECK(std::isfinite(g.yaw));
    CHECK(std::isfinite(g.pitch));
    CHECK(*g.sigma > 0);
  }
}

TEST_CASE("tied bidirectional weights make the output invariant to reversal") {
  for (int layers : {1, 2, 3}) {
    ModelDims d = small_dims();
    d.layers = layers;
    ModelParams p = init_model(ModelKind::Lstm, d, 0.2, 17 + layers);
    const int s = d.state;
    for (int l = 0; l < layers; ++l) {
      GruCell& c = p.fwd[l];
      if (l > 0) {
        // Upper layers read [fwd; bwd], whose halves swap under reversal.
        for (MatrixXd* m : {&c.Wz, &c.Wr, &c.Wh}) m->rightCols(s) = m->leftCols(s);
      }
      p.bwd[l] = c;
    }
    p.head.W.rightCols(s) = p.head.W.leftCols(s);

    Rng rng(layers);
    const MatrixXd w = random_matrix(rng, 7, 8);
    const MatrixXd rev = w.colwise().reverse();
    const Gaze a = forward_sequence(p, w);
    const Gaze b = forward_sequence(p, rev);
    CHECK(std::abs(a.yaw - b.yaw) < 1e-14);
    CHECK(std::abs(a.pitch - b.pitch) < 1e-14);
    CHECK(std::abs(*a.sigma - *b.sigma) < 1e-14);

    // Without tying the two directions disagree.
    const ModelParams untied = init_model(ModelKind::Lstm, d, 0.2, 17 + layers);
    CHECK(std::abs(forward_sequence(untied, w).yaw - forward_sequence(untied, rev).yaw) > 1e-6);
  }
}

TEST_CASE("trn matches a hand-built sub-window average") {
  Rng rng(9);
  const ModelParams p = init_model(ModelKind::Trn, small_dims(), 0.2, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd w = random_matrix(rng, 7, 8);
    VectorXd sum = VectorXd::Zero(3);
    for (std::size_t k = 0; k < trn_windows().size(); ++k) {
      const int len = trn_windows()[k];
      VectorXd cat(len * p.dims.embed);
      for (int i = 0; i < len; ++i) cat.segment(i * p.dims.embed, p.dims.embed) = embed(p, w.row(3 - len / 2 + i));
      VectorXd o = p.trn_heads[k].W * cat + p.trn_heads[k].b;
      o[2] = std::log1p(std::exp(o[2]));
      sum += o;
    }
    const VectorXd expected = sum / 3.0;
    const Gaze g = forward_trn(p, w);
    CHECK(g.yaw == doctest::Approx(expected[0]).epsilon(1e-12));
    CHECK(g.pitch == doctest::Approx(expected[1]).epsilon(1e-12));
    CHECK(*g.sigma == doctest::Approx(expected[2]).epsilon(1e-12));
  }
}

TEST_CASE("trn with identical frames and matched heads equals one window") {
  Rng rng(12);
  ModelParams p = init_model(ModelKind::Trn, small_dims(), 0.2, 8);
  const int e = p.dims.embed;
  for (std::size_t k = 1; k < trn_windows().size(); ++k) {
    const int len = trn_windows()[k];
    for (int i = 0; i < len; ++i) p.trn_heads[k].W.middleCols(i * e, e) = p.trn_heads[0].W / len;
    p.trn_heads[k].b = p.trn_heads[0].b;
  }
  ModelParams single = init_model(ModelKind::Static, small_dims(), 0.2, 8);
  single.mlp1 = p.mlp1;
  single.mlp2 = p.mlp2;
  single.head = p.trn_heads[0];
  const VectorXd x = random_matrix(rng, 8, 1);
  const Gaze a = forward_trn(p, x.transpose().replicate(7, 1));
  const Gaze b = forward_static(single, x);
  CHECK(a.yaw == doctest::Approx(b.yaw).epsilon(1e-12));
  CHECK(a.pitch == doctest::Approx(b.pitch).epsilon(1e-12));
  CHECK(*a.sigma == doctest::Approx(*b.sigma).epsilon(1e-12));
}

TEST_CASE("an outer frame reaches the trn output only through the widest window") {
  Rng rng(13);
  ModelParams p = init_model(ModelKind::Trn, small_dims(), 0.2, 4);
  const MatrixXd w = random_matrix(rng, 7, 8);
  MatrixXd w0 = w;
  w0.row(0).array() += 0.5;
  MatrixXd w2 = w;
  w2.row(2).array() += 0.5;
  CHECK(std::abs(forward_trn(p, w0).yaw - forward_trn(p, w).yaw) > 1e-8);
  p.trn_heads[2].W.setZero();
  CHECK(forward_trn(p, w0).yaw == forward_trn(p, w).yaw);
  CHECK(forward_trn(p, w0).pitch == forward_trn(p, w).pitch);
  // Frame 2 still feeds the 3-frame window.
  CHECK(std::abs(forward_trn(p, w2).yaw - forward_trn(p, w).yaw) > 1e-8);
}

TEST_CASE("analytic gradients match finite differences on random configurations") {
  Rng rng(5);
  double worst = 0;
  for (int c = 0; c < 20; ++c) {
    ModelDims d;
    d.hidden = 2 + static_cast<int>(rng.below(6));
    d.embed = 2 + static_cast<int>(rng.below(5));
    d.state = 2 + static_cast<int>(rng.below(4));
    d.layers = 1 + static_cast<int>(rng.below(2));
    const ModelKind kind = static_cast<ModelKind>(c % 3);
    const LossKind loss = c % 2 ? LossKind::Mse : LossKind::Pinball;
    const ModelParams p = init_model(kind, d, 0.3, c);
    BatchInput in;
    for (int t = 0; t < 7; ++t) in.frames.push_back(random_matrix(rng, 8, 5));
    MatrixXd targets(2, 5);
    for (int j = 0; j < 5; ++j) {
      targets(0, j) = rng.uniform(-3, 3);
      targets(1, j) = rng.uniform(-1, 1);
    }
    RegressorCheckOptions opts;
    opts.with_dropout = c % 4 == 1;
    const RegressorCheck r = check_regressor_gradients(p, in, targets, loss, opts);
    CHECK(r.samples > 0);
    INFO("config " << c << " worst tensor " << r.result.worst_tensor);
    CHECK(r.result.max_rel_error < 1e-4);
    worst = std::max(worst, r.result.max_rel_error);
  }
  MESSAGE("max relative error " << worst);
}

TEST_CASE("zero model with zero targets has no head-bias gradient under MSE") {
  ModelParams p = init_model(ModelKind::Static, small_dims(), 0.0, 1);
  p.for_each([](const std::string&, Eigen::Ref<MatrixXd> m) { m.setZero(); });
  Rng rng(3);
  BatchInput in;
  in.frames.push_back(random_matrix(rng, 8, 4));
  const LossAndGrad lg = backward(p, in, MatrixXd::Zero(2, 4), LossKind::Mse);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grads.head.b.norm() == 0.0);
}

TEST_CASE("loss falls over 100 steps on a fixed batch") {
  for (ModelKind kind : {ModelKind::Static, ModelKind::Trn, ModelKind::Lstm}) {
    for (LossKind loss : {LossKind::Pinball, LossKind::Mse}) {
      ModelParams p = init_model(kind, small_dims(), 0.0, 21);
      Rng rng(6);
      BatchInput in;
      for (int t = 0; t < 7; ++t) in.frames.push_back(random_matrix(rng, 8, 16));
      MatrixXd targets(2, 16);
      for (int j = 0; j < 16; ++j) {
        targets(0, j) = 0.5 * std::tanh(in.frames[3](0, j));
        targets(1, j) = 0.3 * std::tanh(in.frames[3](1, j));
      }
      AdamState<ModelParams> state(zeros_like(p));
      AdamConfig cfg;
      cfg.lr = 1e-2;
      const double first = backward(p, in, targets, loss).loss;
      for (int step = 0; step < 100; ++step) {
        LossAndGrad lg = backward(p, in, targets, loss);
        adam_step(p, lg.grads, state, cfg);
      }
      const double last = backward(p, in, targets, loss).loss;
      INFO(to_string(kind) << " " << to_string(loss));
      CHECK(last < 0.5 * first);
    }
  }
}

TEST_CASE("parameter counts follow the declared layout") {
  const ModelDims d = small_dims();
  const std::size_t mlp = (6 * 8 + 6) + (5 * 6 + 5);
  CHECK(init_model(ModelKind::Static, d, 0.2, 1).parameter_count() == mlp + 3 * 5 + 3);
  const std::size_t cell0 = 3 * (4 * 5 + 4 * 4 + 4);
  const std::size_t cell1 = 3 * (4 * 8 + 4 * 4 + 4);
  CHECK(init_model(ModelKind::Lstm, d, 0.2, 1).parameter_count() == mlp + 2 * (cell0 + cell1) + 3 * 8 + 3);
  CHECK(init_model(ModelKind::Trn, d, 0.2, 1).parameter_count() == mlp + (3 * 5 + 3) + (3 * 15 + 3) + (3 * 35 + 3));
}
