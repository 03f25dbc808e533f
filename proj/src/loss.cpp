#include "gazekit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gazekit/error.hpp"

namespace gazekit {

namespace {

double residual(double gt, double pred, bool wrap) {
  return wrap ? wrap_angle(gt - pred) : gt - pred;
}

// d L_tau / d q, right-continuous at the kink.
double pinball_slope(double q, double tau) { return q >= 0 ? tau : -(1.0 - tau); }

void check_batch(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets) {
  if (out.rows() != 3 || targets.rows() != 2 || out.cols() != targets.cols() || out.cols() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "loss expects 3xB outputs and 2xB targets");
  }
}

}  // namespace

double pinball_term(double angle, double sigma, double gt, double tau, bool wrap) {
  const double r = residual(gt, angle, wrap);
  const double q = tau <= 0.5 ? r + sigma : r - sigma;
  return std::max(tau * q, -(1.0 - tau) * q);
}

double pinball_loss(const Gaze& pred, const Gaze& gt) {
  if (!pred.sigma) throw Error(ErrorCode::MissingSigma, "pinball loss needs a sigma");
  const double s = *pred.sigma;
  double sum = 0;
  for (double tau : {kLowerQuantile, kUpperQuantile}) {
    sum += pinball_term(pred.yaw, s, gt.yaw, tau, true);
    sum += pinball_term(pred.pitch, s, gt.pitch, tau, false);
  }
  return sum / 4.0;
}

double mse_loss(const Gaze& pred, const Gaze& gt) {
  const double dy = wrap_angle(pred.yaw - gt.yaw);
  const double dp = pred.pitch - gt.pitch;
  return (dy * dy + dp * dp) / 2.0;
}

LossResult pinball_batch(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets) {
  check_batch(out, targets);
  const Eigen::Index B = out.cols();
  LossResult res;
  res.grad = Eigen::MatrixXd::Zero(3, B);
  const double w = 1.0 / (4.0 * static_cast<double>(B));
  for (Eigen::Index j = 0; j < B; ++j) {
    const double s = out(2, j);
    for (int a = 0; a < 2; ++a) {
      const double r = residual(targets(a, j), out(a, j), a == 0);
      for (double tau : {kLowerQuantile, kUpperQuantile}) {
        const double dq_ds = tau <= 0.5 ? 1.0 : -1.0;
        const double q = r + dq_ds * s;
        res.value += w * std::max(tau * q, -(1.0 - tau) * q);
        const double slope = w * pinball_slope(q, tau);
        res.grad(a, j) -= slope;
        res.grad(2, j) += slope * dq_ds;
      }
    }
  }
  return res;
}

LossResult mse_batch(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets) {
  check_batch(out, targets);
  const Eigen::Index B = out.cols();
  LossResult res;
  res.grad = Eigen::MatrixXd::Zero(3, B);
  const double w = 1.0 / static_cast<double>(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const double dy = wrap_angle(out(0, j) - targets(0, j));
    const double dp = out(1, j) - targets(1, j);
    res.value += w * (dy * dy + dp * dp) / 2.0;
    res.grad(0, j) = w * dy;
    res.grad(1, j) = w * dp;
  }
  return res;
}

Eigen::VectorXd pinball_kink_margins(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets) {
  check_batch(out, targets);
  Eigen::VectorXd m(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    double best = std::numbers::pi - std::abs(residual(targets(0, j), out(0, j), true));
    for (int a = 0; a < 2; ++a) {
      const double r = residual(targets(a, j), out(a, j), a == 0);
      best = std::min({best, std::abs(r + out(2, j)), std::abs(r - out(2, j))});
    }
    m(j) = best;
  }
  return m;
}

}  // namespace gazekit
