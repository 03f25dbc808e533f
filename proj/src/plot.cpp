#include "gazekit/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "gazekit/io.hpp"
#include "gazekit/mollweide.hpp"

namespace gazekit {

namespace {

constexpr const char* kBackground = "#f4f4f4";

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string num(double v) { return fmt("%.2f", v); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n";
}

std::string text(double x, double y, const std::string& s, const std::string& extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"12\"" + extra + ">" + escape(s) +
         "</text>\n";
}

std::string rect(double x, double y, double w, double h, const std::string& fill, const std::string& cls = "") {
  std::string r = "<rect";
  if (!cls.empty()) r += " class=\"" + cls + "\"";
  return r + " x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" fill=\"" + fill + "\"/>\n";
}

// Tick spacing of 1, 2 or 5 times a power of ten.
double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

}  // namespace

std::string ramp_color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

MollweideHistogram mollweide_histogram(const std::vector<Gaze>& samples, int cols, int rows) {
  if (cols < 1 || rows < 1) throw Error(ErrorCode::ConfigError, "histogram needs at least one bin");
  MollweideHistogram h;
  h.counts = Eigen::MatrixXi::Zero(rows, cols);
  for (const Gaze& g : samples) {
    const MollweidePoint p = mollweide_project(wrap_angle(g.yaw), std::clamp(g.pitch, -std::numbers::pi / 2, std::numbers::pi / 2));
    const double u = (p.x + kMollweideHalfWidth) / (2 * kMollweideHalfWidth);
    const double v = (kMollweideHalfHeight - p.y) / (2 * kMollweideHalfHeight);
    const int c = std::clamp(static_cast<int>(u * cols), 0, cols - 1);
    const int r = std::clamp(static_cast<int>(v * rows), 0, rows - 1);
    ++h.counts(r, c);
    ++h.total;
  }
  return h;
}

std::string distribution_map_svg(const MollweideHistogram& h, const std::string& title) {
  const double scale = 110.0;
  const double margin = 20.0;
  const double top = 30.0;
  const double w = 2 * kMollweideHalfWidth * scale;
  const double hh = 2 * kMollweideHalfHeight * scale;
  const int rows = static_cast<int>(h.counts.rows());
  const int cols = static_cast<int>(h.counts.cols());
  const double cw = w / cols;
  const double ch = hh / rows;
  const double log_max = std::log1p(static_cast<double>(h.counts.maxCoeff()));

  std::string s = header(w + 2 * margin, hh + top + margin);
  s += rect(0, 0, w + 2 * margin, hh + top + margin, "white");
  s += text(margin, 20, title + " (log intensity, n=" + std::to_string(h.total) + ")");
  s += "<ellipse cx=\"" + num(margin + w / 2) + "\" cy=\"" + num(top + hh / 2) + "\" rx=\"" + num(w / 2) +
       "\" ry=\"" + num(hh / 2) + "\" fill=\"" + kBackground + "\" stroke=\"#888\"/>\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int n = h.counts(r, c);
      if (n == 0) continue;
      const double t = log_max > 0 ? std::log1p(static_cast<double>(n)) / log_max : 1.0;
      s += rect(margin + c * cw, top + r * ch, cw, ch, ramp_color(t), "bin");
    }
  }
  s += "</svg>\n";
  return s;
}

void export_distribution_map(const std::vector<Gaze>& samples, const std::string& path, int cols, int rows) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "distribution map needs samples");
  write_text_file(path, distribution_map_svg(mollweide_histogram(samples, cols, rows)));
}

std::string line_chart_svg(const LineChart& chart) {
  const double W = 640, H = 400, L = 60, R = 140, T = 40, B = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymax = 0;
  for (const Series& sr : chart.series) {
    for (double x : sr.x) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : sr.y) ymax = std::max(ymax, y);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= 0) ymax = 1;
  const double ystep = nice_step(ymax, 5);
  ymax = std::ceil(ymax / ystep) * ystep;
  const double pw = W - L - R, ph = H - T - B;
  const auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  const auto Y = [&](double y) { return T + ph - y / ymax * ph; };

  std::string s = header(W, H);
  s += rect(0, 0, W, H, "white");
  s += text(L, 24, chart.title);
  s += "<g stroke=\"#ccc\">\n";
  for (double y = 0; y <= ymax + 1e-9; y += ystep) {
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(Y(y)) + "\" x2=\"" + num(L + pw) + "\" y2=\"" + num(Y(y)) + "\"/>\n";
  }
  s += "</g>\n";
  for (double y = 0; y <= ymax + 1e-9; y += ystep) s += text(L - 8, Y(y) + 4, fmt("%g", y), " text-anchor=\"end\"");
  const double xstep = nice_step(xmax - xmin, 6);
  for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
    s += text(X(x), T + ph + 18, fmt("%g", x), " text-anchor=\"middle\"");
  }
  s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#333\"/>\n";
  s += text(L + pw / 2, H - 10, chart.x_label, " text-anchor=\"middle\"");
  s += text(16, T + ph / 2, chart.y_label,
            " text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(T + ph / 2) + ")\"");

  double ly = T + 10;
  for (const Series& sr : chart.series) {
    const std::string dash = sr.dashed ? " stroke-dasharray=\"6 4\"" : "";
    std::string pts;
    for (std::size_t i = 0; i < std::min(sr.x.size(), sr.y.size()); ++i) {
      if (i) pts += ' ';
      pts += num(X(sr.x[i])) + "," + num(Y(sr.y[i]));
    }
    s += "<polyline fill=\"none\" stroke=\"" + sr.color + "\" stroke-width=\"2\"" + dash + " points=\"" + pts +
         "\"/>\n";
    s += "<line x1=\"" + num(L + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(L + pw + 34) + "\" y2=\"" +
         num(ly) + "\" stroke=\"" + sr.color + "\" stroke-width=\"2\"" + dash + "/>\n";
    s += text(L + pw + 40, ly + 4, sr.name);
    ly += 18;
  }
  s += "</svg>\n";
  return s;
}

std::string yaw_curve_svg(const std::vector<YawBin>& bins) {
  Series err{"mean error", {}, {}, "#1f77b4", false};
  Series sig{"mean sigma", {}, {}, "#d62728", true};
  for (const YawBin& b : bins) {
    err.x.push_back(b.center_deg);
    err.y.push_back(b.mean_error_deg);
    sig.x.push_back(b.center_deg);
    sig.y.push_back(b.mean_sigma_deg);
  }
  return line_chart_svg({"error vs. gaze yaw", "|gaze yaw| (deg)", "degrees", {err, sig}});
}

std::string heatmap_svg(const Eigen::MatrixXd& values, const std::string& title) {
  const double cell = 60, L = 20, T = 40;
  const double W = 2 * L + cell * static_cast<double>(values.cols());
  const double H = T + L + cell * static_cast<double>(values.rows());
  const double vmax = values.size() ? values.maxCoeff() : 0.0;
  std::string s = header(W, H);
  s += rect(0, 0, W, H, "white");
  s += text(L, 24, title);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      const std::string fill = v > 0 && vmax > 0 ? ramp_color(v / vmax) : kBackground;
      const double x = L + cell * static_cast<double>(c), y = T + cell * static_cast<double>(r);
      s += rect(x, y, cell, cell, fill, "cell");
      const bool dark = v > 0 && v / vmax < 0.6;
      s += text(x + cell / 2, y + cell / 2 + 4, fmt("%g", v),
                std::string(" text-anchor=\"middle\" fill=\"") + (dark ? "#fff" : "#000") + "\"");
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace gazekit
