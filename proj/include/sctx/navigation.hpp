// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sctx/context.hpp"

namespace sctx {

using Vec2 = Eigen::Vector2d;

/// Top-down boolean obstacle grid over the scene's (x,z) footprint.
struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();  // world (x,z) of the corner of cell (0,0)
  double resolution = 0.1;     // scene units per cell
  int width = 0;               // cells along x
  int height = 0;              // cells along z
  std::vector<std::uint8_t> cells;  // row-major [z][x], 1 = occupied

  bool in_bounds(int x, int z) const {
    return x >= 0 && x < width && z >= 0 && z < height;
  }
  bool occupied(int x, int z) const {
    return cells[static_cast<std::size_t>(z) * width + x] != 0;
  }
  Vec2 cell_center(int x, int z) const {
    return origin + Vec2((x + 0.5) * resolution, (z + 0.5) * resolution);
  }
  /// Cell indices for a world (x,z); may be out of bounds.
  std::pair<int, int> cell_of(const Vec2& world) const;
};

/// Default height band: 5%..60% of the cloud's y extent, excluding floor
/// and ceiling points.
std::pair<double, double> default_height_band(const SpatialContext& context);

/// A cell is occupied iff some non-background point with y inside the band
/// (inclusive) falls in it; occupied cells are then dilated by
/// ceil(inflate/resolution) cells (Chebyshev disc).
OccupancyGrid build_occupancy(const SpatialContext& context, double resolution,
                              std::pair<double, double> height_band, double inflate);

struct PlannedPath {
  std::vector<Vec2> waypoints;  // cell centers, start to goal
  double length = 0.0;          // Euclidean, equals the octile cost in world units
};

/// A* over 8-connected free cells with the octile heuristic (diagonal cost
/// sqrt 2). Diagonal steps are forbidden when both adjacent orthogonal
/// cells are occupied. The result is optimal in octile length.
PlannedPath plan_path(const OccupancyGrid& grid, const Vec2& start, const Vec2& goal);

/// (x,z) of the AABB center of an instance resolved by id or by unique
/// case-insensitive name.
Vec2 instance_anchor(const SpatialContext& context, const std::string& name_or_id);

std::string path_to_json(const PlannedPath& path);
void write_pgm(const OccupancyGrid& grid, const std::string& path);

}  // namespace sctx
