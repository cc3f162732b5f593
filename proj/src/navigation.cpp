// SPDX-License-Identifier: Apache-2.0
#include "sctx/navigation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <queue>

#include "sctx/strings.hpp"

namespace sctx {

std::pair<int, int> OccupancyGrid::cell_of(const Vec2& world) const {
  return {static_cast<int>(std::floor((world.x() - origin.x()) / resolution)),
          static_cast<int>(std::floor((world.y() - origin.y()) / resolution))};
}

std::pair<double, double> default_height_band(const SpatialContext& context) {
  const Aabb box = context.cloud.aabb();
  const double y0 = box.min.y();
  const double ext = box.extent().y();
  return {y0 + 0.05 * ext, y0 + 0.60 * ext};
}

OccupancyGrid build_occupancy(const SpatialContext& context, double resolution,
                              std::pair<double, double> height_band, double inflate) {
  if (context.cloud.empty()) {
    throw Error(ErrorCode::empty_cloud, "build_occupancy on empty cloud");
  }
  if (!(resolution > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "resolution must be positive");
  }
  if (!(height_band.first < height_band.second)) {
    throw Error(ErrorCode::invalid_argument, "height band must satisfy min_y < max_y");
  }

  const Aabb box = context.cloud.aabb();
  OccupancyGrid grid;
  grid.resolution = resolution;
  grid.origin = Vec2(box.min.x(), box.min.z());
  grid.width = static_cast<int>(std::floor((box.max.x() - box.min.x()) / resolution)) + 1;
  grid.height = static_cast<int>(std::floor((box.max.z() - box.min.z()) / resolution)) + 1;
  grid.cells.assign(static_cast<std::size_t>(grid.width) * grid.height, 0);

  for (const auto& p : context.cloud.points) {
    if (p.label == 0) continue;  // background never blocks
    const double y = p.position.y();
    if (y < height_band.first || y > height_band.second) continue;
    const auto [cx, cz] = grid.cell_of(Vec2(p.position.x(), p.position.z()));
    if (grid.in_bounds(cx, cz)) {
      grid.cells[static_cast<std::size_t>(cz) * grid.width + cx] = 1;
    }
  }

  const int k = inflate > 0.0
                    ? static_cast<int>(std::ceil(inflate / resolution - 1e-9))
                    : 0;
  if (k > 0) {
    std::vector<std::uint8_t> dilated = grid.cells;
    for (int z = 0; z < grid.height; ++z) {
      for (int x = 0; x < grid.width; ++x) {
        if (!grid.occupied(x, z)) continue;
        for (int dz = -k; dz <= k; ++dz) {
          for (int dx = -k; dx <= k; ++dx) {
            const int nx = x + dx;
            const int nz = z + dz;
            if (grid.in_bounds(nx, nz)) {
              dilated[static_cast<std::size_t>(nz) * grid.width + nx] = 1;
            }
          }
        }
      }
    }
    grid.cells = std::move(dilated);
  }
  return grid;
}

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

struct OpenNode {
  double f = 0.0;
  double g = 0.0;
  int index = 0;

  bool operator>(const OpenNode& o) const {
    if (f != o.f) return f > o.f;
    if (g != o.g) return g > o.g;  // prefer larger g (closer to goal)
    return index > o.index;
  }
};

double octile(int dx, int dz) {
  const int adx = std::abs(dx);
  const int adz = std::abs(dz);
  return (adx + adz) + (kSqrt2 - 2.0) * std::min(adx, adz);
}

}  // namespace

PlannedPath plan_path(const OccupancyGrid& grid, const Vec2& start, const Vec2& goal) {
  const auto [sx, sz] = grid.cell_of(start);
  const auto [gx, gz] = grid.cell_of(goal);
  if (!grid.in_bounds(sx, sz) || grid.occupied(sx, sz)) {
    throw Error(ErrorCode::start_occupied,
                !grid.in_bounds(sx, sz) ? "start is outside the grid"
                                        : "start cell is occupied");
  }
  if (!grid.in_bounds(gx, gz) || grid.occupied(gx, gz)) {
    throw Error(ErrorCode::goal_occupied, !grid.in_bounds(gx, gz)
                                              ? "goal is outside the grid"
                                              : "goal cell is occupied");
  }

  const int w = grid.width;
  const int start_idx = sz * w + sx;
  const int goal_idx = gz * w + gx;

  std::vector<double> g_cost(grid.cells.size(), std::numeric_limits<double>::infinity());
  std::vector<int> parent(grid.cells.size(), -1);
  std::priority_queue<OpenNode, std::vector<OpenNode>, std::greater<OpenNode>> open;

  g_cost[static_cast<std::size_t>(start_idx)] = 0.0;
  open.push({octile(gx - sx, gz - sz), 0.0, start_idx});

  const int step_x[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  const int step_z[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  bool found = start_idx == goal_idx;
  while (!found && !open.empty()) {
    const OpenNode cur = open.top();
    open.pop();
    if (cur.g > g_cost[static_cast<std::size_t>(cur.index)]) continue;  // stale entry
    if (cur.index == goal_idx) {
      found = true;
      break;
    }
    const int cx = cur.index % w;
    const int cz = cur.index / w;
    for (int dir = 0; dir < 8; ++dir) {
      const int nx = cx + step_x[dir];
      const int nz = cz + step_z[dir];
      if (!grid.in_bounds(nx, nz) || grid.occupied(nx, nz)) continue;
      const bool diagonal = dir >= 4;
      if (diagonal) {
        // no corner cutting through two blocked orthogonal cells
        const bool side_a = !grid.in_bounds(nx, cz) || grid.occupied(nx, cz);
        const bool side_b = !grid.in_bounds(cx, nz) || grid.occupied(cx, nz);
        if (side_a && side_b) continue;
      }
      const double cost = diagonal ? kSqrt2 : 1.0;
      const double tentative = cur.g + cost;
      const int nidx = nz * w + nx;
      if (tentative < g_cost[static_cast<std::size_t>(nidx)]) {
        g_cost[static_cast<std::size_t>(nidx)] = tentative;
        parent[static_cast<std::size_t>(nidx)] = cur.index;
        open.push({tentative + octile(gx - nx, gz - nz), tentative, nidx});
      }
    }
  }

  if (!found) {
    throw Error(ErrorCode::no_path, "no collision-free path between the given anchors");
  }

  std::vector<int> chain;
  for (int at = goal_idx; at != -1; at = parent[static_cast<std::size_t>(at)]) {
    chain.push_back(at);
    if (at == start_idx) break;
  }
  std::reverse(chain.begin(), chain.end());

  PlannedPath path;
  path.waypoints.reserve(chain.size());
  for (int idx : chain) {
    path.waypoints.push_back(grid.cell_center(idx % w, idx / w));
  }
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    path.length += (path.waypoints[i] - path.waypoints[i - 1]).norm();
  }
  return path;
}

Vec2 instance_anchor(const SpatialContext& context, const std::string& name_or_id) {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };

  std::optional<std::uint32_t> id;
  if (!name_or_id.empty() &&
      std::all_of(name_or_id.begin(), name_or_id.end(),
                  [](unsigned char c) { return std::isdigit(c); })) {
    id = static_cast<std::uint32_t>(std::stoul(name_or_id));
    if (!context.graph.has_node(*id)) {
      throw Error(ErrorCode::unknown_instance, "no instance with id " + name_or_id);
    }
  } else {
    const std::string wanted = lower(name_or_id);
    for (const auto& [node_id, node] : context.graph.nodes) {
      if (lower(node.name) == wanted) {
        if (id) {
          throw Error(ErrorCode::ambiguous_name,
                      "multiple instances are named '" + name_or_id + "'");
        }
        id = node_id;
      }
    }
    if (!id) {
      throw Error(ErrorCode::unknown_instance, "no instance named '" + name_or_id + "'");
    }
  }

  const Aabb box = instance_aabb(context, *id);
  const Vec3 c = box.center();
  return Vec2(c.x(), c.z());
}

std::string path_to_json(const PlannedPath& path) {
  std::string out = "{\"waypoints\":[";
  for (std::size_t i = 0; i < path.waypoints.size(); ++i) {
    if (i) out += ',';
    out += '[' + format_double(path.waypoints[i].x()) + ',' +
           format_double(path.waypoints[i].y()) + ']';
  }
  out += "],\"length\":" + format_double(path.length) + '}';
  return out;
}

void write_pgm(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
  for (int z = 0; z < grid.height; ++z) {
    for (int x = 0; x < grid.width; ++x) {
      out.put(grid.occupied(x, z) ? '\0' : static_cast<char>(255));
    }
  }
  if (!out) throw Error(ErrorCode::io_error, "short write on " + path);
}

}  // namespace sctx
