#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gazekit/adam.hpp"
#include "gazekit/loss.hpp"
#include "gazekit/metrics.hpp"
#include "gazekit/model.hpp"
#include "gazekit/rng.hpp"

using namespace gazekit;
using Eigen::MatrixXd;

namespace {

double laplace(Rng& rng, double scale) {
  const double u = rng.uniform(-0.5, 0.5);
  return -scale * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
}

// Linear heads on fixed features: rows yaw, pitch, sigma_raw.
struct LinearHead {
  MatrixXd W = MatrixXd::Zero(3, 2);
  MatrixXd b = MatrixXd::Zero(3, 1);

  void for_each(const std::function<void(const std::string&, Eigen::Ref<MatrixXd>)>& f) {
    f("W", W);
    f("b", b);
  }

  MatrixXd raw(const MatrixXd& x) const { return (W * x).colwise() + b.col(0); }

  MatrixXd out(const MatrixXd& x) const {
    MatrixXd o = raw(x);
    for (Eigen::Index j = 0; j < o.cols(); ++j) o(2, j) = softplus(o(2, j));
    return o;
  }
};

struct LaplaceSet {
  MatrixXd x;
  MatrixXd targets;
};

LaplaceSet laplace_set(Rng& rng, int n, double scale) {
  LaplaceSet s{MatrixXd(2, n), MatrixXd(2, n)};
  for (int j = 0; j < n; ++j) {
    s.x(0, j) = rng.uniform(-1, 1);
    s.x(1, j) = rng.uniform(-1, 1);
    s.targets(0, j) = 0.5 * s.x(0, j) - 0.3 * s.x(1, j) + laplace(rng, scale);
    s.targets(1, j) = 0.2 * s.x(1, j) + laplace(rng, scale);
  }
  return s;
}

}  // namespace

TEST_CASE("hand-evaluated pinball terms") {
  CHECK(pinball_term(0.5, 0.1, 0.7, 0.9) == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(pinball_term(0.5, 0.1, 0.7, 0.1) == doctest::Approx(0.03).epsilon(1e-12));
  const double s = 0.25;
  CHECK(pinball_term(1.0, s, 1.0 + s, 0.9) == 0.0);
  CHECK(pinball_term(1.0, s, 1.0 + s, 0.1) == doctest::Approx(0.2 * s).epsilon(1e-12));
  const Gaze g{0.4, -0.2, {}};
  CHECK(pinball_loss(Gaze{0.4, -0.2, 0.0}, g) == 0.0);
  CHECK_THROWS_AS(pinball_loss(g, g), Error);
}

TEST_CASE("pinball terms wrap the yaw residual") {
  const double pi = std::numbers::pi;
  CHECK(pinball_term(pi - 0.05, 0.1, -pi + 0.05, 0.9, true) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(pinball_term(pi - 0.05, 0.1, -pi + 0.05, 0.1, true) == doctest::Approx(0.1 * 0.2).epsilon(1e-12));
  const Gaze pred{pi - 0.01, 0.0, 0.05};
  const Gaze gt{-pi + 0.01, 0.0, {}};
  CHECK(pinball_loss(pred, gt) < 0.05);
}

TEST_CASE("squared error examples") {
  CHECK(mse_loss(Gaze{0.3, 0.1, {}}, Gaze{0.3, 0.1, {}}) == 0.0);
  CHECK(mse_loss(Gaze{0.5, 0.1, {}}, Gaze{0.3, 0.1, {}}) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(mse_loss(Gaze{0.1, 0.1, {}}, Gaze{0.3, 0.1, {}}) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(mse_loss(Gaze{0.5, 0.1, 9.0}, Gaze{0.3, 0.1, {}}) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("batch losses agree with the scalar definitions") {
  Rng rng(3);
  MatrixXd out(3, 20), tg(2, 20);
  double pin = 0, mse = 0;
  for (int j = 0; j < 20; ++j) {
    out(0, j) = rng.uniform(-3, 3);
    out(1, j) = rng.uniform(-1, 1);
    out(2, j) = rng.uniform(0, 0.5);
    tg(0, j) = rng.uniform(-3, 3);
    tg(1, j) = rng.uniform(-1, 1);
    pin += pinball_loss(Gaze{out(0, j), out(1, j), out(2, j)}, Gaze{tg(0, j), tg(1, j), {}});
    mse += mse_loss(Gaze{out(0, j), out(1, j), {}}, Gaze{tg(0, j), tg(1, j), {}});
  }
  CHECK(pinball_batch(out, tg).value == doctest::Approx(pin / 20).epsilon(1e-12));
  CHECK(mse_batch(out, tg).value == doctest::Approx(mse / 20).epsilon(1e-12));
  CHECK_THROWS_AS(pinball_batch(out, MatrixXd::Zero(2, 19)), Error);
}

TEST_CASE("pinball loss is convex in angle and sigma") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const Gaze gt{rng.uniform(-1, 1), rng.uniform(-1, 1), {}};
    const double a0 = rng.uniform(-1, 1), a1 = rng.uniform(-1, 1);
    const double p0 = rng.uniform(-1, 1), p1 = rng.uniform(-1, 1);
    const double s0 = rng.uniform(0, 1), s1 = rng.uniform(0, 1);
    const double l0 = pinball_loss(Gaze{a0, p0, s0}, gt);
    const double l1 = pinball_loss(Gaze{a1, p1, s1}, gt);
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const Gaze mid{(1 - t) * a0 + t * a1, (1 - t) * p0 + t * p1, (1 - t) * s0 + t * s1};
      CHECK(pinball_loss(mid, gt) <= (1 - t) * l0 + t * l1 + 1e-12);
    }
  }
}

TEST_CASE("pinball training on Laplace noise recovers the 10-90 spread") {
  const double scale = 0.2;
  Rng rng(5);
  const LaplaceSet train = laplace_set(rng, 4000, scale);
  LinearHead head;
  AdamState<LinearHead> state(head);
  AdamConfig cfg;
  cfg.lr = 0.02;
  for (int step = 0; step < 1500; ++step) {
    const MatrixXd raw = head.raw(train.x);
    const MatrixXd out = head.out(train.x);
    LossResult lr = pinball_batch(out, train.targets);
    for (Eigen::Index j = 0; j < raw.cols(); ++j) lr.grad(2, j) *= sigmoid(raw(2, j));
    LinearHead g;
    g.W = lr.grad * train.x.transpose();
    g.b = lr.grad.rowwise().sum();
    adam_step(head, g, state, cfg);
  }
  const LaplaceSet test = laplace_set(rng, 20000, scale);
  const MatrixXd out = head.out(test.x);
  std::vector<Gaze> preds, gts;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    preds.push_back({out(0, j), out(1, j), out(2, j)});
    gts.push_back({test.targets(0, j), test.targets(1, j), {}});
  }
  const Coverage c = coverage(preds, gts);
  MESSAGE("coverage " << c.per_angle << " sigma " << out(2, 0) << " expected " << scale * std::log(5.0));
  CHECK(std::abs(c.per_angle - 0.80) <= 0.05);
  CHECK(out(2, 0) == doctest::Approx(scale * std::log(5.0)).epsilon(0.1));
}

TEST_CASE("kink margins measure the distance to the nearest non-smooth point") {
  MatrixXd out(3, 1), tg(2, 1);
  out << 0.0, 0.0, 0.1;
  tg << 0.1005, 0.5;
  CHECK(pinball_kink_margins(out, tg)(0) == doctest::Approx(0.0005).epsilon(1e-6));
  tg << 0.5, 0.5;
  CHECK(pinball_kink_margins(out, tg)(0) == doctest::Approx(0.4).epsilon(1e-12));
}
