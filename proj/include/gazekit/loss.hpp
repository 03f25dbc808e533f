#pragma once

// Quantile (pinball) and squared-error losses on spherical gaze outputs.
//
// Yaw residuals are wrapped into (-pi, pi] so the loss is continuous across
// the rear of the yaw circle; for |residual| < pi this is the plain difference.

#include <Eigen/Core>

#include "gazekit/geometry.hpp"

namespace gazekit {

inline constexpr double kLowerQuantile = 0.1;
inline constexpr double kUpperQuantile = 0.9;

/// Single term L_tau(angle, sigma, gt): residual q = gt - (angle - sigma) for
/// tau <= 0.5 and gt - (angle + sigma) otherwise; loss max(tau q, -(1 - tau) q).
double pinball_term(double angle, double sigma, double gt, double tau, bool wrap = false);

/// Mean over {yaw, pitch} x {0.1, 0.9}. Requires pred.sigma.
double pinball_loss(const Gaze& pred, const Gaze& gt);

/// ((yaw - yaw_gt)^2 + (pitch - pitch_gt)^2) / 2; sigma ignored.
double mse_loss(const Gaze& pred, const Gaze& gt);

struct LossResult {
  double value = 0;
  /// dLoss/dOut, 3 x batch (yaw, pitch, sigma rows).
  Eigen::MatrixXd grad;
};

/// Batch mean of pinball_loss. `out` is 3 x B, `targets` 2 x B.
LossResult pinball_batch(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets);
LossResult mse_batch(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets);

/// Per-sample distance to the nearest non-smooth point of pinball_batch: the
/// smallest |q| over both angles and quantiles, or the distance of the wrapped
/// yaw residual from +-pi if that is smaller.
Eigen::VectorXd pinball_kink_margins(const Eigen::MatrixXd& out, const Eigen::MatrixXd& targets);

}  // namespace gazekit
