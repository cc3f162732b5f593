// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sctx/context.hpp"
#include "sctx/geometry.hpp"

namespace sctx {

/// Right-handed camera looking along its local -z axis.
struct Camera {
  enum class Kind { perspective, orthographic };

  RigidTransform pose;  // world-from-camera
  Kind kind = Kind::orthographic;
  double fov_y = 1.047197551196597746;  // 60 deg, perspective only
  double half_height = 1.0;             // scene units, orthographic only
  int width = 512;
  int height = 512;

  std::string name;  // "top", "side_pos_x", ... for exported files
};

/// RGB + instance + depth layers of one rendered view. instance 0 means
/// empty or background; empty pixels carry +inf depth.
struct PointMap {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;                // 3 * width * height, [0,1]
  std::vector<std::uint32_t> instance;   // width * height
  std::vector<float> depth;              // width * height

  std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

/// Splat every cloud point through the camera with a z-buffer. Points behind
/// the camera or whose projected center falls outside the image are skipped;
/// each surviving point writes a disc of `splat_radius` pixels; depth ties
/// keep the lower point index.
PointMap render_pointmap(const LabeledPointCloud& cloud, const Camera& camera,
                         int splat_radius = 1);

/// Three orthographic cameras framing the cloud AABB with a 10% margin:
/// top-down along -y (image up = scene -z) and side views along +x and -x
/// (image up = +y).
std::vector<Camera> canonical_cameras(const LabeledPointCloud& cloud,
                                      int resolution = 512);

struct ExportedPointMap {
  std::string rgb_png;
  std::string instance_png;
  std::string depth_raw;   // little-endian float32, row-major
  std::string depth_meta;  // one line: "width height"
};

/// Writes base_path + {.rgb.png, .instance.png, .depth.raw, .depth.dim}.
ExportedPointMap export_pointmap(const PointMap& map, const std::string& base_path);

/// Reads back the instance layer written by export_pointmap (test aid and
/// downstream consumers).
std::vector<std::uint32_t> load_instance_png(const std::string& path, int& width,
                                             int& height);

}  // namespace sctx
