#pragma once

// Shelf attention mapping: intersect world-space gaze rays with a planar
// grid of cells and count hits per cell.

#include <Eigen/Core>

#include <json.hpp>

#include <optional>
#include <vector>

#include "gazekit/geometry.hpp"

namespace gazekit {

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

/// Planar grid. `origin` is the corner of cell (0, 0); columns advance along
/// `u_axis` and rows along `normal x u_axis`.
struct AttentionGrid {
  Vec3d origin{0.0, 0.0, 0.0};
  Vec3d normal{0.0, 1.0, 0.0};
  Vec3d u_axis{1.0, 0.0, 0.0};
  int rows = 4;
  int cols = 6;
  double cell_w = 0.25;
  double cell_h = 0.25;
  Eigen::MatrixXd counts;

  /// Throws DegeneratePlane unless normal and u_axis are unit length (to
  /// 1e-9), mutually orthogonal, and the cell layout is non-empty.
  void validate() const;
  Vec3d v_axis() const { return normal.cross(u_axis); }
  Vec3d cell_center(const Cell& c) const;
};

AttentionGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttentionGrid& g);

struct GazeRay {
  Vec3d origin;
  Vec3d direction;
};

/// Cell hit by the ray, or nullopt for rays parallel to the plane, pointing
/// away from it, or landing outside the grid.
std::optional<Cell> intersect(const GazeRay& ray, const AttentionGrid& grid);

struct AttentionResult {
  Eigen::MatrixXd counts;
  int hits = 0;
  int misses = 0;
  /// Fraction of labeled rays whose hit cell equals the label; misses count
  /// as wrong. Zero when nothing is labeled.
  double accuracy = 0;
  int labeled = 0;
};

/// `labels` is either empty or aligned with `rays`.
AttentionResult attention_map(const std::vector<GazeRay>& rays, const AttentionGrid& grid,
                              const std::vector<std::optional<Cell>>& labels = {});

struct ShopperSample {
  GazeRay ray;
  Cell label;
};

struct ShopperConfig {
  int shoppers = 20;
  int fixations_per_shopper = 30;
  /// Shopper eyes stand this far in front of the shelf plane.
  double distance_min = 0.8;
  double distance_max = 2.0;
  double eye_height_min = 1.5;
  double eye_height_max = 1.8;
  /// Angular gaze noise, degrees, applied as an isotropic perturbation.
  double gaze_noise_deg = 0.0;
};

/// Shoppers in front of the shelf fixate uniformly chosen cell centers. The
/// grid must be vertical-ish enough that eye heights land in front of it; the
/// lateral eye position is drawn over the grid's horizontal extent.
std::vector<ShopperSample> simulate_shoppers(const AttentionGrid& grid, const ShopperConfig& cfg,
                                             std::uint64_t seed);

}  // namespace gazekit
