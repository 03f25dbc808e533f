#pragma once

// Central finite-difference gradient verification.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gazekit/adam.hpp"
#include "gazekit/model.hpp"

namespace gazekit {

struct TensorCheck {
  std::string name;
  double max_rel_error = 0;
  std::size_t entries = 0;
};

struct GradCheckResult {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0;
  std::string worst_tensor;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is essentially zero from being judged on round-off alone.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares `analytic` with (f(p + eps) - f(p - eps)) / 2 eps entry by entry.
/// `params` is perturbed in place and restored.
template <typename Params>
GradCheckResult check_gradients(Params& params, const Params& analytic, const std::function<double()>& f,
                                double eps = 1e-5) {
  Params a = analytic;
  auto p = tensor_views(params);
  auto g = tensor_views(a);
  std::vector<std::string> names;
  params.for_each([&](const std::string& n, Eigen::Ref<Eigen::MatrixXd>) { names.push_back(n); });
  if (p.size() != g.size()) throw Error(ErrorCode::ShapeMismatch, "gradient structure differs from params");
  GradCheckResult res;
  for (std::size_t i = 0; i < p.size(); ++i) {
    TensorCheck tc{names[i], 0, static_cast<std::size_t>(p[i].size())};
    for (Eigen::Index k = 0; k < p[i].size(); ++k) {
      double& w = p[i].data()[k];
      const double saved = w;
      w = saved + eps;
      const double up = f();
      w = saved - eps;
      const double down = f();
      w = saved;
      tc.max_rel_error = std::max(tc.max_rel_error, relative_error(g[i].data()[k], (up - down) / (2 * eps)));
    }
    if (tc.max_rel_error >= res.max_rel_error) {
      res.max_rel_error = tc.max_rel_error;
      res.worst_tensor = tc.name;
    }
    res.tensors.push_back(tc);
  }
  return res;
}

struct RegressorCheckOptions {
  double eps = 1e-5;
  /// Samples with a pinball margin at or below this are dropped.
  double kink_margin = 1e-3;
  /// Check the dropout path with a fixed mask (re-seeded for every evaluation).
  bool with_dropout = false;
  std::uint64_t dropout_seed = 7;
};

struct RegressorCheck {
  GradCheckResult result;
  /// Samples kept after kink exclusion.
  Eigen::Index samples = 0;
};

/// Checks Network::backward for the given loss on a batch.
RegressorCheck check_regressor_gradients(const ModelParams& params, const BatchInput& in,
                                         const Eigen::MatrixXd& targets, LossKind loss,
                                         const RegressorCheckOptions& opts = {});

}  // namespace gazekit
