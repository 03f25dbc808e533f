#include "gazekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace gazekit {

namespace {

void check_aligned(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts) {
  if (preds.size() != gts.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and ground truth differ in length");
  }
}

double angle_to_camera_deg(const Gaze& g) {
  static const UnitVec3d camera = UnitVec3d::from_unit(Vec3d(0, 0, -1));
  return angular_error(from_spherical(g), camera);
}

}  // namespace

std::vector<double> angular_errors(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts) {
  check_aligned(preds, gts);
  std::vector<double> e(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) e[i] = angular_error(preds[i], gts[i]);
  return e;
}

SubsetErrors subset_errors(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts) {
  check_aligned(preds, gts);
  SubsetErrors s;
  double all = 0, front = 0, facing = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = angular_error(preds[i], gts[i]);
    const double a = angle_to_camera_deg(gts[i]);
    all += e;
    ++s.n_all;
    if (a <= 90.0) {
      front += e;
      ++s.n_front180;
    }
    if (a <= 20.0) {
      facing += e;
      ++s.n_frontfacing;
    }
  }
  const auto mean = [](double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : 0.0; };
  s.mean_all = mean(all, s.n_all);
  s.mean_front180 = mean(front, s.n_front180);
  s.mean_frontfacing = mean(facing, s.n_frontfacing);
  return s;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = rank;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "spearman inputs differ in length");
  if (a.size() < 3) throw Error(ErrorCode::TooFewSamples, "spearman needs at least 3 samples");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  // A constant input has no ranking information.
  if (saa == 0 || sbb == 0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

Coverage coverage(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts) {
  check_aligned(preds, gts);
  if (preds.empty()) throw Error(ErrorCode::TooFewSamples, "coverage of an empty set");
  Coverage c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!preds[i].sigma) throw Error(ErrorCode::MissingSigma, "prediction without sigma");
    const double s = *preds[i].sigma;
    const bool y = std::abs(wrap_angle(preds[i].yaw - gts[i].yaw)) <= s;
    const bool p = std::abs(preds[i].pitch - gts[i].pitch) <= s;
    c.yaw += y;
    c.pitch += p;
    c.joint += y && p;
  }
  const double n = static_cast<double>(preds.size());
  c.yaw /= n;
  c.pitch /= n;
  c.joint /= n;
  c.per_angle = (c.yaw + c.pitch) / 2.0;
  return c;
}

std::vector<YawBin> yaw_curve(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts,
                              double bin_width_deg) {
  check_aligned(preds, gts);
  if (!(bin_width_deg > 0)) throw Error(ErrorCode::ConfigError, "bin width must be positive");
  std::map<long, YawBin> bins;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double yaw = std::abs(rad2deg(gts[i].yaw));
    const long k = std::min(static_cast<long>(std::floor(yaw / bin_width_deg)),
                            static_cast<long>(std::ceil(180.0 / bin_width_deg)) - 1);
    YawBin& b = bins[k];
    b.center_deg = (static_cast<double>(k) + 0.5) * bin_width_deg;
    b.mean_error_deg += angular_error(preds[i], gts[i]);
    b.mean_sigma_deg += preds[i].sigma ? rad2deg(*preds[i].sigma) : 0.0;
    ++b.count;
  }
  std::vector<YawBin> out;
  for (auto& [k, b] : bins) {
    b.mean_error_deg /= static_cast<double>(b.count);
    b.mean_sigma_deg /= static_cast<double>(b.count);
    out.push_back(b);
  }
  return out;
}

std::string yaw_curve_csv(const std::vector<YawBin>& bins) {
  std::string s = "yaw_bin_center_deg,mean_error_deg,mean_sigma_deg,count\n";
  char line[160];
  for (const YawBin& b : bins) {
    std::snprintf(line, sizeof line, "%.3f,%.6f,%.6f,%zu\n", b.center_deg, b.mean_error_deg, b.mean_sigma_deg,
                  b.count);
    s += line;
  }
  return s;
}

MetricsReport evaluate(const std::vector<Gaze>& preds, const std::vector<Gaze>& gts, double bin_width_deg) {
  MetricsReport r;
  r.errors = subset_errors(preds, gts);
  r.yaw_table = yaw_curve(preds, gts, bin_width_deg);
  const bool has_sigma =
      !preds.empty() && std::all_of(preds.begin(), preds.end(), [](const Gaze& g) { return g.sigma.has_value(); });
  if (has_sigma) {
    r.coverage80 = coverage(preds, gts);
    if (preds.size() >= 3) {
      std::vector<double> sig;
      for (const Gaze& g : preds) sig.push_back(*g.sigma);
      r.uncert_spearman = spearman(sig, angular_errors(preds, gts));
    }
  }
  return r;
}

}  // namespace gazekit
