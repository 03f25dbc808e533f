#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gazekit/adam.hpp"
#include "gazekit/model.hpp"

using namespace gazekit;

namespace {

struct Pair {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 3);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 1);

  void for_each(const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& f) {
    f("a", a);
    f("b", b);
  }
};

}  // namespace

TEST_CASE("zero gradients leave parameters unchanged") {
  Pair p;
  p.a.setRandom();
  p.b.setRandom();
  const Pair before = p;
  Pair g;
  AdamState<Pair> s(p);
  for (int i = 0; i < 5; ++i) adam_step(p, g, s, AdamConfig{});
  CHECK(p.a == before.a);
  CHECK(p.b == before.b);
  CHECK(s.step == 5);
}

TEST_CASE("the first step moves each weight by lr against the gradient sign") {
  // m_hat = g and v_hat = g^2, so the update is -lr * g / (|g| + eps).
  for (double g0 : {3.0, -0.02, 1e-3}) {
    Pair p;
    Pair g;
    g.a(1, 2) = g0;
    AdamState<Pair> s(p);
    AdamConfig cfg;
    cfg.lr = 1e-3;
    adam_step(p, g, s, cfg);
    const double expected = -cfg.lr * g0 / (std::abs(g0) + cfg.eps);
    CHECK(p.a(1, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(p.a(1, 2) + cfg.lr * (g0 > 0 ? 1 : -1)) < 1e-7);
    CHECK(p.a(0, 0) == 0.0);
  }
}

TEST_CASE("a constant gradient keeps the step at lr") {
  Pair p;
  Pair g;
  g.b.setConstant(0.7);
  AdamState<Pair> s(p);
  AdamConfig cfg;
  cfg.lr = 0.01;
  for (int i = 0; i < 50; ++i) adam_step(p, g, s, cfg);
  CHECK(p.b(0) == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("mismatched structures are rejected") {
  Pair p;
  Pair g;
  g.a.resize(3, 3);
  AdamState<Pair> s(p);
  try {
    adam_step(p, g, s, AdamConfig{});
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("identical runs give identical trajectories") {
  const auto run = [] {
    ModelParams p = init_model(ModelKind::Lstm, ModelDims{8, 4, 3, 3, 2, 7}, 0.2, 9);
    ModelParams g = zeros_like(p);
    AdamState<ModelParams> s(g);
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
      g.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> m) {
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
      });
      adam_step(p, g, s, AdamConfig{});
    }
    std::vector<double> flat;
    p.for_each([&](const std::string&, const Eigen::Ref<const Eigen::MatrixXd>& m) {
      flat.insert(flat.end(), m.data(), m.data() + m.size());
    });
    return flat;
  };
  CHECK(run() == run());
}
