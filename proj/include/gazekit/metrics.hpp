#pragma once

// Evaluation metrics: angular error over camera-relative subsets, rank
// correlation of predicted uncertainty with error, quantile coverage, and
// error-vs-yaw tables.

#include <optional>
#include <string>
#include <vector>

#include "gazekit/geometry.hpp"

namespace gazekit {

struct SubsetErrors {
  double mean_all = 0;
  double mean_front180 = 0;
  double mean_frontfacing = 0;
  std::size_t n_all = 0;
  std::size_t n_front180 = 0;
  std::size_t n_frontfacing = 0;
};

/// Means over all samples and over samples whose ground truth lies within
/// 90 and 20 degrees of the camera direction (0,0,-1). Empty subsets report 0.
SubsetErrors subset_errors(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v);

struct Coverage {
  double yaw = 0;
  double pitch = 0;
  /// Mean of yaw and pitch coverage; the headline number.
  double per_angle = 0;
  /// Both angles inside the interval at once.
  double joint = 0;
};

Coverage coverage(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts);

struct YawBin {
  double center_deg = 0;
  double mean_error_deg = 0;
  double mean_sigma_deg = 0;
  std::size_t count = 0;
};

/// Bins by |gt yaw| in degrees; empty bins are omitted. mean_sigma_deg is 0
/// when predictions carry no sigma.
std::vector<YawBin> yaw_curve(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts,
                              double bin_width_deg = 15.0);

std::string yaw_curve_csv(const std::vector<YawBin>& bins);

struct MetricsReport {
  SubsetErrors errors;
  std::optional<double> uncert_spearman;
  std::optional<Coverage> coverage80;
  std::vector<YawBin> yaw_table;
};

/// Full report; uncertainty fields are filled when every prediction has sigma.
MetricsReport evaluate(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts,
                       double bin_width_deg = 15.0);

/// Per-sample angular errors, degrees.
std::vector<double> angular_errors(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts);

}  // namespace gazekit
