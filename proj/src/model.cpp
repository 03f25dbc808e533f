#include "gazekit/model.hpp"

#include <cmath>

#include "gazekit/error.hpp"

namespace gazekit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd affine(const Dense& d, const MatrixXd& x) {
  return (d.W * x).colwise() + d.b;
}

void affine_backward(const Dense& d, Dense& g, const MatrixXd& x, const MatrixXd& dy, MatrixXd* dx) {
  g.W.noalias() += dy * x.transpose();
  g.b += dy.rowwise().sum();
  if (dx) *dx = d.W.transpose() * dy;
}

MatrixXd tanh_of(const MatrixXd& z) { return z.array().tanh().matrix(); }
MatrixXd sigmoid_of(const MatrixXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

Tape::CellStep cell_forward(const GruCell& c, const MatrixXd& x, const MatrixXd& h) {
  Tape::CellStep s;
  s.x = x;
  s.h = h;
  s.z = sigmoid_of((c.Wz * x + c.Uz * h).colwise() + c.bz);
  s.r = sigmoid_of((c.Wr * x + c.Ur * h).colwise() + c.br);
  const MatrixXd rh = s.r.cwiseProduct(h);
  s.c = tanh_of((c.Wh * x + c.Uh * rh).colwise() + c.bh);
  return s;
}

MatrixXd cell_output(const Tape::CellStep& s) {
  return (1.0 - s.z.array()).matrix().cwiseProduct(s.h) + s.z.cwiseProduct(s.c);
}

// Returns dLoss/dh_prev; accumulates parameter grads and adds dLoss/dx to dx.
MatrixXd cell_backward(const GruCell& c, GruCell& g, const Tape::CellStep& s, const MatrixXd& dh_new,
                       MatrixXd& dx) {
  const MatrixXd dz = dh_new.cwiseProduct(s.c - s.h);
  const MatrixXd dc = dh_new.cwiseProduct(s.z);
  MatrixXd dh = dh_new.cwiseProduct((1.0 - s.z.array()).matrix());

  const MatrixXd dac = dc.cwiseProduct((1.0 - s.c.array().square()).matrix());
  const MatrixXd rh = s.r.cwiseProduct(s.h);
  g.Wh.noalias() += dac * s.x.transpose();
  g.Uh.noalias() += dac * rh.transpose();
  g.bh += dac.rowwise().sum();
  const MatrixXd drh = c.Uh.transpose() * dac;
  const MatrixXd dr = drh.cwiseProduct(s.h);
  dh += drh.cwiseProduct(s.r);
  dx.noalias() += c.Wh.transpose() * dac;

  const MatrixXd daz = dz.cwiseProduct(s.z.cwiseProduct((1.0 - s.z.array()).matrix()));
  g.Wz.noalias() += daz * s.x.transpose();
  g.Uz.noalias() += daz * s.h.transpose();
  g.bz += daz.rowwise().sum();
  dx.noalias() += c.Wz.transpose() * daz;
  dh.noalias() += c.Uz.transpose() * daz;

  const MatrixXd dar = dr.cwiseProduct(s.r.cwiseProduct((1.0 - s.r.array()).matrix()));
  g.Wr.noalias() += dar * s.x.transpose();
  g.Ur.noalias() += dar * s.h.transpose();
  g.br += dar.rowwise().sum();
  dx.noalias() += c.Wr.transpose() * dar;
  dh.noalias() += c.Ur.transpose() * dar;
  return dh;
}

template <typename Cell, typename F>
void visit_cell(Cell& c, const std::string& prefix, F&& f) {
  f(prefix + ".Wz", c.Wz);
  f(prefix + ".Uz", c.Uz);
  f(prefix + ".bz", c.bz);
  f(prefix + ".Wr", c.Wr);
  f(prefix + ".Ur", c.Ur);
  f(prefix + ".br", c.br);
  f(prefix + ".Wh", c.Wh);
  f(prefix + ".Uh", c.Uh);
  f(prefix + ".bh", c.bh);
}

template <typename P, typename F>
void visit_all(P& p, F&& f) {
  f(std::string("mlp1.W"), p.mlp1.W);
  f(std::string("mlp1.b"), p.mlp1.b);
  f(std::string("mlp2.W"), p.mlp2.W);
  f(std::string("mlp2.b"), p.mlp2.b);
  for (std::size_t l = 0; l < p.fwd.size(); ++l) visit_cell(p.fwd[l], "fwd" + std::to_string(l), f);
  for (std::size_t l = 0; l < p.bwd.size(); ++l) visit_cell(p.bwd[l], "bwd" + std::to_string(l), f);
  if (p.kind != ModelKind::Trn) {
    f(std::string("head.W"), p.head.W);
    f(std::string("head.b"), p.head.b);
  }
  for (std::size_t k = 0; k < p.trn_heads.size(); ++k) {
    const std::string name = "trn" + std::to_string(trn_windows()[k]);
    f(name + ".W", p.trn_heads[k].W);
    f(name + ".b", p.trn_heads[k].b);
  }
}

Dense make_dense(int out, int in) {
  return Dense{MatrixXd::Zero(out, in), VectorXd::Zero(out)};
}

GruCell make_cell(int in, int state) {
  GruCell c;
  c.Wz = c.Wr = c.Wh = MatrixXd::Zero(state, in);
  c.Uz = c.Ur = c.Uh = MatrixXd::Zero(state, state);
  c.bz = c.br = c.bh = VectorXd::Zero(state);
  return c;
}

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  MatrixXd m(rows, cols);
  const double keep = 1.0 - rate;
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform01() < keep ? 1.0 / keep : 0.0;
  }
  return m;
}

}  // namespace

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Static: return "static";
    case ModelKind::Trn: return "trn";
    case ModelKind::Lstm: return "lstm";
  }
  return "?";
}

const char* to_string(LossKind k) { return k == LossKind::Pinball ? "pinball" : "mse"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "static") return ModelKind::Static;
  if (s == "trn") return ModelKind::Trn;
  if (s == "lstm") return ModelKind::Lstm;
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + s + "'");
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "pinball") return LossKind::Pinball;
  if (s == "mse") return LossKind::Mse;
  throw Error(ErrorCode::ConfigError, "unknown loss kind '" + s + "'");
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const std::vector<int>& trn_windows() {
  static const std::vector<int> w = {1, 3, 7};
  return w;
}

void ModelParams::for_each(
    const std::function<void(const std::string&, Eigen::Ref<Eigen::MatrixXd>)>& f) {
  visit_all(*this, [&](const std::string& name, auto& m) {
    Eigen::Map<MatrixXd> view(m.data(), m.rows(), m.cols());
    f(name, view);
  });
}

void ModelParams::for_each(
    const std::function<void(const std::string&, const Eigen::Ref<const Eigen::MatrixXd>&)>& f) const {
  visit_all(*this, [&](const std::string& name, const auto& m) {
    Eigen::Map<const MatrixXd> view(m.data(), m.rows(), m.cols());
    f(name, view);
  });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Eigen::Ref<const MatrixXd>& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

ModelParams init_model(ModelKind kind, const ModelDims& dims, double dropout_rate, std::uint64_t seed) {
  if (dims.features < 1 || dims.hidden < 1 || dims.embed < 1 || dims.state < 1 || dims.layers < 1 ||
      dims.window < 1 || dims.window % 2 == 0) {
    throw Error(ErrorCode::ConfigError, "model dimensions must be positive with an odd window");
  }
  if (kind == ModelKind::Trn && dims.window < trn_windows().back()) {
    throw Error(ErrorCode::ConfigError, "trn needs a window of at least 7 frames");
  }
  if (!(dropout_rate >= 0 && dropout_rate < 1)) {
    throw Error(ErrorCode::ConfigError, "dropout_rate must lie in [0, 1)");
  }
  ModelParams p;
  p.kind = kind;
  p.dims = dims;
  p.dropout_rate = dropout_rate;
  p.mlp1 = make_dense(dims.hidden, dims.features);
  p.mlp2 = make_dense(dims.embed, dims.hidden);
  switch (kind) {
    case ModelKind::Static:
      p.head = make_dense(3, dims.embed);
      break;
    case ModelKind::Lstm:
      for (int l = 0; l < dims.layers; ++l) {
        const int in = l == 0 ? dims.embed : 2 * dims.state;
        p.fwd.push_back(make_cell(in, dims.state));
        p.bwd.push_back(make_cell(in, dims.state));
      }
      p.head = make_dense(3, 2 * dims.state);
      break;
    case ModelKind::Trn:
      for (int k : trn_windows()) p.trn_heads.push_back(make_dense(3, dims.embed * k));
      break;
  }
  Rng rng(seed);
  p.for_each([&](const std::string& name, Eigen::Ref<MatrixXd> m) {
    const bool bias = name.find(".b") != std::string::npos;
    if (bias) return;
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
    }
  });
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  z.for_each([](const std::string&, Eigen::Ref<MatrixXd> m) { m.setZero(); });
  return z;
}

void check_same_shape(const ModelParams& a, const ModelParams& b) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> sa, sb;
  a.for_each([&](const std::string&, const Eigen::Ref<const MatrixXd>& m) { sa.emplace_back(m.rows(), m.cols()); });
  b.for_each([&](const std::string&, const Eigen::Ref<const MatrixXd>& m) { sb.emplace_back(m.rows(), m.cols()); });
  if (a.kind != b.kind || sa != sb) throw Error(ErrorCode::ShapeMismatch, "parameter structures differ");
}

void check_input(const ModelParams& p, const BatchInput& in) {
  if (in.frames.empty()) throw Error(ErrorCode::ShapeMismatch, "no input frames");
  const auto t = static_cast<int>(in.frames.size());
  if (p.kind == ModelKind::Static) {
    if (t % 2 == 0) throw Error(ErrorCode::ShapeMismatch, "static input needs an odd frame count");
  } else if (t != p.dims.window) {
    throw Error(ErrorCode::ShapeMismatch,
                "expected " + std::to_string(p.dims.window) + " frames, got " + std::to_string(t));
  }
  for (const MatrixXd& f : in.frames) {
    if (f.rows() != p.dims.features || f.cols() != in.frames.front().cols() || f.cols() == 0) {
      throw Error(ErrorCode::ShapeMismatch, "frame feature/batch shape mismatch");
    }
  }
}

ForwardResult Network::forward(const BatchInput& in, const ForwardOptions& opts, Tape* tape) const {
  check_input(p_, in);
  const int T = static_cast<int>(in.frames.size());
  const int center = T / 2;
  const Eigen::Index B = in.batch();

  Tape local;
  Tape& tp = tape ? *tape : local;
  tp = Tape{};
  tp.center = center;
  tp.frames.resize(static_cast<std::size_t>(T));

  const auto embed = [&](int t) {
    Tape::DenseTanh& f = tp.frames[static_cast<std::size_t>(t)];
    if (f.e.size() == 0) {
      f.x = in.frames[static_cast<std::size_t>(t)];
      f.h1 = tanh_of(affine(p_.mlp1, f.x));
      f.e = tanh_of(affine(p_.mlp2, f.h1));
    }
    return f.e;
  };

  const auto head_pass = [&](const Dense& head, MatrixXd x) {
    if (opts.dropout_rng && p_.dropout_rate > 0) {
      MatrixXd mask = dropout_mask(x.rows(), x.cols(), p_.dropout_rate, *opts.dropout_rng);
      x = x.cwiseProduct(mask);
      tp.head_masks.push_back(std::move(mask));
    }
    MatrixXd raw = affine(head, x);
    tp.head_inputs.push_back(std::move(x));
    tp.head_raw.push_back(raw);
    return raw;
  };

  ForwardResult res;
  res.out.resize(3, B);
  const auto finish = [&](const MatrixXd& raw, MatrixXd& out) {
    out.row(0) = raw.row(0);
    out.row(1) = raw.row(1);
    out.row(2) = raw.row(2).unaryExpr([](double v) { return softplus(v); });
  };

  switch (p_.kind) {
    case ModelKind::Static: {
      finish(head_pass(p_.head, embed(center)), res.out);
      break;
    }
    case ModelKind::Trn: {
      res.out.setZero();
      const auto& sizes = trn_windows();
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        const int h = sizes[k] / 2;
        MatrixXd x(p_.dims.embed * sizes[k], B);
        for (int j = -h; j <= h; ++j) x.middleRows((j + h) * p_.dims.embed, p_.dims.embed) = embed(center + j);
        MatrixXd out_k(3, B);
        finish(head_pass(p_.trn_heads[k], std::move(x)), out_k);
        res.out += out_k;
      }
      res.out /= static_cast<double>(sizes.size());
      break;
    }
    case ModelKind::Lstm: {
      std::vector<MatrixXd> xs(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) xs[static_cast<std::size_t>(t)] = embed(t);
      const Eigen::Index S = p_.dims.state;
      tp.layers.resize(p_.fwd.size());
      MatrixXd final_state(2 * S, B);
      for (std::size_t l = 0; l < p_.fwd.size(); ++l) {
        Tape::Layer& layer = tp.layers[l];
        layer.fwd.resize(static_cast<std::size_t>(T));
        layer.bwd.resize(static_cast<std::size_t>(T));
        std::vector<MatrixXd> next(static_cast<std::size_t>(T), MatrixXd(2 * S, B));
        MatrixXd h = MatrixXd::Zero(S, B);
        for (int t = 0; t < T; ++t) {
          auto& step = layer.fwd[static_cast<std::size_t>(t)];
          step = cell_forward(p_.fwd[l], xs[static_cast<std::size_t>(t)], h);
          h = cell_output(step);
          next[static_cast<std::size_t>(t)].topRows(S) = h;
        }
        final_state.topRows(S) = h;
        h.setZero();
        for (int t = T - 1; t >= 0; --t) {
          auto& step = layer.bwd[static_cast<std::size_t>(t)];
          step = cell_forward(p_.bwd[l], xs[static_cast<std::size_t>(t)], h);
          h = cell_output(step);
          next[static_cast<std::size_t>(t)].bottomRows(S) = h;
        }
        final_state.bottomRows(S) = h;
        xs = std::move(next);
      }
      finish(head_pass(p_.head, final_state), res.out);
      break;
    }
  }
  res.center_embedding = tp.frames[static_cast<std::size_t>(center)].e;
  return res;
}

void Network::backward(const Tape& tp, const MatrixXd& d_out, ModelParams& g,
                       const MatrixXd* d_center_embedding) const {
  const int T = static_cast<int>(tp.frames.size());
  const int center = tp.center;
  const Eigen::Index B = d_out.cols();
  const Eigen::Index D = p_.dims.embed;
  std::vector<MatrixXd> de(static_cast<std::size_t>(T));
  const auto add_de = [&](int t, const MatrixXd& v) {
    auto& slot = de[static_cast<std::size_t>(t)];
    if (slot.size() == 0) slot = v;
    else slot += v;
  };

  // dLoss/draw for head i, scaled by `scale`.
  const auto head_grad = [&](std::size_t i, double scale) {
    MatrixXd d_raw(3, B);
    d_raw.row(0) = d_out.row(0) * scale;
    d_raw.row(1) = d_out.row(1) * scale;
    const auto& raw = tp.head_raw[i];
    for (Eigen::Index j = 0; j < B; ++j) d_raw(2, j) = d_out(2, j) * scale * sigmoid(raw(2, j));
    return d_raw;
  };
  const auto head_backward = [&](const Dense& head, Dense& gh, std::size_t i, double scale) {
    MatrixXd dx;
    affine_backward(head, gh, tp.head_inputs[i], head_grad(i, scale), &dx);
    if (!tp.head_masks.empty()) dx = dx.cwiseProduct(tp.head_masks[i]);
    return dx;
  };

  switch (p_.kind) {
    case ModelKind::Static:
      add_de(center, head_backward(p_.head, g.head, 0, 1.0));
      break;
    case ModelKind::Trn: {
      const auto& sizes = trn_windows();
      const double scale = 1.0 / static_cast<double>(sizes.size());
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        const MatrixXd dx = head_backward(p_.trn_heads[k], g.trn_heads[k], k, scale);
        const int h = sizes[k] / 2;
        for (int j = -h; j <= h; ++j) add_de(center + j, dx.middleRows((j + h) * D, D));
      }
      break;
    }
    case ModelKind::Lstm: {
      const Eigen::Index S = p_.dims.state;
      const MatrixXd d_final = head_backward(p_.head, g.head, 0, 1.0);
      const std::size_t L = p_.fwd.size();
      // Gradients w.r.t. each layer's per-step outputs [h_fwd; h_bwd].
      std::vector<MatrixXd> d_outs(static_cast<std::size_t>(T), MatrixXd::Zero(2 * S, B));
      d_outs[static_cast<std::size_t>(T - 1)].topRows(S) = d_final.topRows(S);
      d_outs[0].bottomRows(S) += d_final.bottomRows(S);
      for (std::size_t li = L; li-- > 0;) {
        const Tape::Layer& layer = tp.layers[li];
        const Eigen::Index in_dim = li == 0 ? D : 2 * S;
        std::vector<MatrixXd> d_in(static_cast<std::size_t>(T), MatrixXd::Zero(in_dim, B));
        MatrixXd dh = MatrixXd::Zero(S, B);
        for (int t = T - 1; t >= 0; --t) {
          dh += d_outs[static_cast<std::size_t>(t)].topRows(S);
          dh = cell_backward(p_.fwd[li], g.fwd[li], layer.fwd[static_cast<std::size_t>(t)], dh,
                             d_in[static_cast<std::size_t>(t)]);
        }
        dh.setZero();
        for (int t = 0; t < T; ++t) {
          dh += d_outs[static_cast<std::size_t>(t)].bottomRows(S);
          dh = cell_backward(p_.bwd[li], g.bwd[li], layer.bwd[static_cast<std::size_t>(t)], dh,
                             d_in[static_cast<std::size_t>(t)]);
        }
        d_outs = std::move(d_in);
      }
      for (int t = 0; t < T; ++t) add_de(t, d_outs[static_cast<std::size_t>(t)]);
      break;
    }
  }
  if (d_center_embedding) add_de(center, *d_center_embedding);

  for (int t = 0; t < T; ++t) {
    const MatrixXd& d = de[static_cast<std::size_t>(t)];
    if (d.size() == 0) continue;
    const Tape::DenseTanh& f = tp.frames[static_cast<std::size_t>(t)];
    const MatrixXd dz2 = d.cwiseProduct((1.0 - f.e.array().square()).matrix());
    MatrixXd dh1;
    affine_backward(p_.mlp2, g.mlp2, f.h1, dz2, &dh1);
    const MatrixXd dz1 = dh1.cwiseProduct((1.0 - f.h1.array().square()).matrix());
    affine_backward(p_.mlp1, g.mlp1, f.x, dz1, nullptr);
  }
}

BatchInput batch_from_windows(const std::vector<const Eigen::MatrixXd*>& windows) {
  BatchInput in;
  if (windows.empty()) return in;
  const Eigen::Index T = windows.front()->rows();
  const Eigen::Index F = windows.front()->cols();
  const auto B = static_cast<Eigen::Index>(windows.size());
  in.frames.assign(static_cast<std::size_t>(T), MatrixXd(F, B));
  for (Eigen::Index b = 0; b < B; ++b) {
    const MatrixXd& w = *windows[static_cast<std::size_t>(b)];
    if (w.rows() != T || w.cols() != F) throw Error(ErrorCode::ShapeMismatch, "ragged windows");
    for (Eigen::Index t = 0; t < T; ++t) in.frames[static_cast<std::size_t>(t)].col(b) = w.row(t).transpose();
  }
  return in;
}

namespace {

Gaze to_gaze(const MatrixXd& out, LossKind loss) {
  Gaze g;
  g.yaw = out(0, 0);
  g.pitch = out(1, 0);
  if (loss == LossKind::Pinball) g.sigma = out(2, 0);
  return g;
}

Gaze single(const ModelParams& p, const MatrixXd& window, LossKind loss) {
  const BatchInput in = batch_from_windows({&window});
  return to_gaze(Network(p).forward(in).out, loss);
}

}  // namespace

Gaze forward_static(const ModelParams& p, const Eigen::VectorXd& x, LossKind loss) {
  if (p.kind != ModelKind::Static) throw Error(ErrorCode::ShapeMismatch, "not a static model");
  if (x.size() != p.dims.features) throw Error(ErrorCode::ShapeMismatch, "feature length mismatch");
  const MatrixXd w = x.transpose();
  return single(p, w, loss);
}

Gaze forward_sequence(const ModelParams& p, const MatrixXd& window, LossKind loss) {
  if (p.kind != ModelKind::Lstm) throw Error(ErrorCode::ShapeMismatch, "not a recurrent model");
  return single(p, window, loss);
}

Gaze forward_trn(const ModelParams& p, const MatrixXd& window, LossKind loss) {
  if (p.kind != ModelKind::Trn) throw Error(ErrorCode::ShapeMismatch, "not a trn model");
  return single(p, window, loss);
}

Gaze predict(const ModelParams& p, const MatrixXd& window, LossKind loss) {
  return single(p, window, loss);
}

}  // namespace gazekit
