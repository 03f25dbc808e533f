#pragma once

// Adam with bias-corrected moments over any parameter set exposing
// for_each(name, Ref<MatrixXd>).

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "gazekit/error.hpp"

namespace gazekit {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Params>
std::vector<Eigen::Map<Eigen::MatrixXd>> tensor_views(Params& p) {
  std::vector<Eigen::Map<Eigen::MatrixXd>> views;
  p.for_each([&](const std::string&, Eigen::Ref<Eigen::MatrixXd> m) {
    views.emplace_back(m.data(), m.rows(), m.cols());
  });
  return views;
}

template <typename Params>
struct AdamState {
  Params m;
  Params v;
  long step = 0;

  explicit AdamState(const Params& like) : m(like), v(like) {
    for (auto& t : tensor_views(m)) t.setZero();
    for (auto& t : tensor_views(v)) t.setZero();
  }
};

template <typename Params>
void adam_step(Params& params, Params& grads, AdamState<Params>& state, const AdamConfig& cfg) {
  auto p = tensor_views(params);
  auto g = tensor_views(grads);
  auto m = tensor_views(state.m);
  auto v = tensor_views(state.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer tensor counts differ");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].rows() != g[i].rows() || p[i].cols() != g[i].cols() || p[i].rows() != m[i].rows() ||
        p[i].cols() != m[i].cols()) {
      throw Error(ErrorCode::ShapeMismatch, "optimizer tensor shapes differ");
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i].cwiseAbs2();
    p[i].array() -= cfg.lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + cfg.eps);
  }
}

}  // namespace gazekit
