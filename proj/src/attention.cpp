#include "gazekit/attention.hpp"

#include <cmath>

#include "gazekit/rng.hpp"

namespace gazekit {

namespace {

constexpr double kUnitTol = 1e-9;
constexpr double kParallelTol = 1e-12;

Vec3d vec3_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ConfigError, std::string(key) + " must have 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void AttentionGrid::validate() const {
  if (std::abs(normal.norm() - 1.0) > kUnitTol || std::abs(u_axis.norm() - 1.0) > kUnitTol) {
    throw Error(ErrorCode::DegeneratePlane, "plane normal and u axis must be unit vectors");
  }
  if (std::abs(normal.dot(u_axis)) > kUnitTol) {
    throw Error(ErrorCode::DegeneratePlane, "u axis must lie in the plane");
  }
  if (rows < 1 || cols < 1 || !(cell_w > 0) || !(cell_h > 0)) {
    throw Error(ErrorCode::DegeneratePlane, "grid needs positive rows, cols and cell extents");
  }
  if (!origin.allFinite()) throw Error(ErrorCode::DegeneratePlane, "grid origin is not finite");
}

Vec3d AttentionGrid::cell_center(const Cell& c) const {
  return origin + (c.col + 0.5) * cell_w * u_axis + (c.row + 0.5) * cell_h * v_axis();
}

AttentionGrid grid_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "grid config must be an object");
  AttentionGrid g;
  // A shelf 1.5 m wide whose top edge is at 1.9 m, facing +y.
  g.origin = Vec3d(-0.75, 0.0, 1.9);
  for (const auto& [key, v] : j.items()) {
    if (key == "origin") g.origin = vec3_from_json(v, "origin");
    else if (key == "normal") g.normal = vec3_from_json(v, "normal");
    else if (key == "u_axis") g.u_axis = vec3_from_json(v, "u_axis");
    else if (key == "rows") g.rows = v.get<int>();
    else if (key == "cols") g.cols = v.get<int>();
    else if (key == "cell_w") g.cell_w = v.get<double>();
    else if (key == "cell_h") g.cell_h = v.get<double>();
    else if (key == "shoppers" || key == "fixations_per_shopper" || key == "gaze_noise_deg") continue;
    else throw Error(ErrorCode::ConfigError, "unknown grid key: " + key);
  }
  g.validate();
  g.counts = Eigen::MatrixXd::Zero(g.rows, g.cols);
  return g;
}

nlohmann::json to_json(const AttentionGrid& g) {
  return {{"origin", {g.origin.x(), g.origin.y(), g.origin.z()}},
          {"normal", {g.normal.x(), g.normal.y(), g.normal.z()}},
          {"u_axis", {g.u_axis.x(), g.u_axis.y(), g.u_axis.z()}},
          {"rows", g.rows},
          {"cols", g.cols},
          {"cell_w", g.cell_w},
          {"cell_h", g.cell_h}};
}

std::optional<Cell> intersect(const GazeRay& ray, const AttentionGrid& grid) {
  const double denom = grid.normal.dot(ray.direction);
  if (std::abs(denom) < kParallelTol * ray.direction.norm()) return std::nullopt;
  const double t = grid.normal.dot(grid.origin - ray.origin) / denom;
  if (!(t > 0)) return std::nullopt;
  const Vec3d local = ray.origin + t * ray.direction - grid.origin;
  const double u = local.dot(grid.u_axis) / grid.cell_w;
  const double v = local.dot(grid.v_axis()) / grid.cell_h;
  if (!(u >= 0 && v >= 0 && u < grid.cols && v < grid.rows)) return std::nullopt;
  return Cell{static_cast<int>(v), static_cast<int>(u)};
}

AttentionResult attention_map(const std::vector<GazeRay>& rays, const AttentionGrid& grid,
                              const std::vector<std::optional<Cell>>& labels) {
  grid.validate();
  if (!labels.empty() && labels.size() != rays.size()) {
    throw Error(ErrorCode::LengthMismatch, "labels must align with rays");
  }
  AttentionResult res;
  res.counts = Eigen::MatrixXd::Zero(grid.rows, grid.cols);
  int correct = 0;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const std::optional<Cell> hit = intersect(rays[i], grid);
    if (hit) {
      res.counts(hit->row, hit->col) += 1;
      ++res.hits;
    } else {
      ++res.misses;
    }
    if (!labels.empty() && labels[i]) {
      ++res.labeled;
      correct += hit && *hit == *labels[i];
    }
  }
  res.accuracy = res.labeled ? static_cast<double>(correct) / res.labeled : 0.0;
  return res;
}

std::vector<ShopperSample> simulate_shoppers(const AttentionGrid& grid, const ShopperConfig& cfg,
                                             std::uint64_t seed) {
  grid.validate();
  if (cfg.shoppers < 0 || cfg.fixations_per_shopper < 0 || !(cfg.distance_min > 0) ||
      cfg.distance_max < cfg.distance_min || cfg.eye_height_max < cfg.eye_height_min || cfg.gaze_noise_deg < 0) {
    throw Error(ErrorCode::ConfigError, "invalid shopper configuration");
  }
  Rng rng = Rng::stream(seed, 21);
  const double noise = deg2rad(cfg.gaze_noise_deg);
  std::vector<ShopperSample> out;
  out.reserve(static_cast<std::size_t>(cfg.shoppers) * cfg.fixations_per_shopper);
  for (int s = 0; s < cfg.shoppers; ++s) {
    // Stand in front of a random point on the shelf's horizontal extent.
    const double along = rng.uniform(0.0, grid.cols * grid.cell_w);
    Vec3d eye = grid.origin + along * grid.u_axis + rng.uniform(cfg.distance_min, cfg.distance_max) * grid.normal;
    eye.z() = rng.uniform(cfg.eye_height_min, cfg.eye_height_max);
    for (int f = 0; f < cfg.fixations_per_shopper; ++f) {
      const Cell c{static_cast<int>(rng.below(static_cast<std::uint64_t>(grid.rows))),
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(grid.cols)))};
      Vec3d d = (grid.cell_center(c) - eye).normalized();
      const Vec3d n = rng.normal3();
      if (noise > 0) d = (d + noise * (n - n.dot(d) * d)).normalized();
      out.push_back({{eye, d}, c});
    }
  }
  return out;
}

}  // namespace gazekit
