#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gazekit/mollweide.hpp"
#include "gazekit/plot.hpp"
#include "gazekit/rng.hpp"
#include "gazekit/simulator.hpp"

using namespace gazekit;

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

// Half-angle t0 with 2 t0 + sin 2 t0 = pi / 2, found by bisection. The
// horizontal chord of the ellipse at sqrt(2) sin t0 cuts off a quarter of
// its area, which fixes the equal-area quartile bands in both axes.
double quartile_angle() {
  double lo = 0, hi = kPi / 2;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (2 * mid + std::sin(2 * mid) < kPi / 2 ? lo : hi) = mid;
  }
  return lo;
}

int band(double v, double edge) { return v < -edge ? 0 : v < 0 ? 1 : v < edge ? 2 : 3; }

}  // namespace

TEST_CASE("identity, pole and seam examples") {
  MollweidePoint p = mollweide_project(0, 0);
  CHECK(std::abs(p.x) < 1e-9);
  CHECK(std::abs(p.y) < 1e-9);
  p = mollweide_project(0, kPi / 2);
  CHECK(std::abs(p.x) < 1e-9);
  CHECK(std::abs(p.y - std::sqrt(2.0)) < 1e-9);
  p = mollweide_project(0.7, -kPi / 2);
  CHECK(std::abs(p.x) < 1e-9);
  CHECK(std::abs(p.y + std::sqrt(2.0)) < 1e-9);
  p = mollweide_project(kPi, 0);
  CHECK(std::abs(p.x - 2 * std::sqrt(2.0)) < 1e-9);
  CHECK(std::abs(p.y) < 1e-9);
  CHECK_THROWS_AS(mollweide_project(0, 1.6), Error);
  CHECK_THROWS_AS(mollweide_project(3.2, 0), Error);
}

TEST_CASE("auxiliary angle solves its defining equation") {
  for (double phi = -kPi / 2; phi <= kPi / 2; phi += 0.01) {
    const double a = mollweide_auxiliary(phi);
    CHECK(std::abs(2 * a + std::sin(2 * a) - kPi * std::sin(phi)) < 1e-9);
  }
  for (double phi : {1.5707, 1.57079, -1.570796}) {
    const double a = mollweide_auxiliary(phi);
    CHECK(std::abs(2 * a + std::sin(2 * a) - kPi * std::sin(phi)) < 1e-9);
  }
}

TEST_CASE("uniform sphere samples land uniformly on the ellipse") {
  const double t0 = quartile_angle();
  const double y_edge = std::sqrt(2.0) * std::sin(t0);
  const double x_edge = 2 * std::sqrt(2.0) * std::sin(t0);
  Rng rng(31);
  const int n = 200000;
  std::array<int, 4> by_y{}, by_x{};
  for (int i = 0; i < n; ++i) {
    const double yaw = rng.uniform(-kPi, kPi);
    const double pitch = std::asin(rng.uniform(-1, 1));
    const MollweidePoint p = mollweide_project(yaw, pitch);
    CHECK(p.x * p.x / 8 + p.y * p.y / 2 <= 1 + 1e-12);
    ++by_y[band(p.y, y_edge)];
    ++by_x[band(p.x, x_edge)];
  }
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(by_y[k] / (n / 4.0) - 1) < 0.02);
    CHECK(std::abs(by_x[k] / (n / 4.0) - 1) < 0.02);
  }
}

TEST_CASE("a single sample lights a single bin") {
  const MollweideHistogram h = mollweide_histogram({Gaze{0.3, 0.2, {}}});
  CHECK(h.total == 1);
  CHECK(h.counts.sum() == 1);
  CHECK((h.counts.array() > 0).count() == 1);
  const std::string svg = distribution_map_svg(h);
  CHECK(count_of(svg, "class=\"bin\"") == 1);
  CHECK(count_of(svg, "<ellipse") == 1);
}

TEST_CASE("distribution map export") {
  const auto dir = std::filesystem::temp_directory_path() / "gazekit_test_plot";
  std::filesystem::create_directories(dir);
  try {
    export_distribution_map({}, (dir / "empty.svg").string());
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDataset);
  }
  const std::string blocker = (dir / "blocker").string();
  std::ofstream(blocker) << "x";
  try {
    export_distribution_map({Gaze{}}, blocker + "/map.svg");
    FAIL("expected IOFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IOFailure);
  }

  SessionConfig cfg;
  cfg.seed = 2;
  std::vector<Gaze> gts;
  for (const FrameRecord& f : simulate_session(cfg)) gts.push_back(f.gt_gaze);
  const MollweideHistogram h = mollweide_histogram(gts);
  const std::string svg = distribution_map_svg(h);
  CHECK(count_of(svg, "class=\"bin\"") == static_cast<std::size_t>((h.counts.array() > 0).count()));
  // The equator row reaches both far ends of the map.
  const Eigen::VectorXi mid = h.counts.middleRows(16, 4).colwise().sum().transpose();
  CHECK(mid.head(4).sum() > 0);
  CHECK(mid.tail(4).sum() > 0);
  CHECK((mid.array() > 0).count() > 60);

  export_distribution_map(gts, (dir / "a.svg").string());
  export_distribution_map(gts, (dir / "b.svg").string());
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(dir / "a.svg") == slurp(dir / "b.svg"));
  CHECK(slurp(dir / "a.svg") == svg);
}

TEST_CASE("line charts and heatmaps") {
  std::vector<YawBin> bins;
  for (int k = 0; k < 12; ++k) bins.push_back({7.5 + 15 * k, 5.0 + k, 2.0 + 0.5 * k, 10});
  const std::string curve = yaw_curve_svg(bins);
  CHECK(count_of(curve, "<polyline") == 2);
  CHECK(count_of(curve, "<polyline fill=\"none\" stroke=\"") == 2);
  CHECK(count_of(curve, "stroke-dasharray") >= 1);
  CHECK(curve == yaw_curve_svg(bins));

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 6);
  v(0, 0) = 3;
  v(3, 5) = 1;
  const std::string heat = heatmap_svg(v, "shelf");
  CHECK(count_of(heat, "class=\"cell\"") == 24);
  CHECK(ramp_color(0) != ramp_color(1));
  CHECK(ramp_color(0.5).size() == 7);
}
