#pragma once

// Vector-graphics (SVG) figures. All numbers are printed with fixed precision
// so identical inputs produce byte-identical files.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/metrics.hpp"

namespace gazekit {

/// 2D histogram over the bounding box of the Mollweide ellipse.
/// counts(r, c): row 0 is the top (highest pitch).
struct MollweideHistogram {
  Eigen::MatrixXi counts;
  int total = 0;
};

MollweideHistogram mollweide_histogram(const std::vector<Gaze>& samples, int cols = 72, int rows = 36);

/// Log-intensity distribution map; empty bins keep the background color.
std::string distribution_map_svg(const MollweideHistogram& h, const std::string& title = "gaze distribution");

/// Throws EmptyDataset for no samples and IOFailure when the file cannot be written.
void export_distribution_map(const std::vector<Gaze>& samples, const std::string& path, int cols = 72,
                             int rows = 36);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

std::string line_chart_svg(const LineChart& chart);

/// Error (solid) and predicted sigma (dashed) against |yaw|.
std::string yaw_curve_svg(const std::vector<YawBin>& bins);

/// Cell grid shaded by count; row 0 drawn at the top.
std::string heatmap_svg(const Eigen::MatrixXd& values, const std::string& title);

/// RGB hex for t in [0, 1] on a perceptually ordered dark-to-bright ramp.
std::string ramp_color(double t);

}  // namespace gazekit
