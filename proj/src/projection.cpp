// SPDX-License-Identifier: Apache-2.0
#include "sctx/projection.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "sctx/image_io.hpp"

namespace sctx {

PointMap render_pointmap(const LabeledPointCloud& cloud, const Camera& camera,
                         int splat_radius) {
  if (cloud.empty()) throw Error(ErrorCode::empty_cloud, "render_pointmap on empty cloud");

  const int w = camera.width;
  const int h = camera.height;
  PointMap map;
  map.width = w;
  map.height = h;
  map.rgb.assign(static_cast<std::size_t>(w) * h * 3, 0.0f);
  map.instance.assign(static_cast<std::size_t>(w) * h, 0u);
  map.depth.assign(static_cast<std::size_t>(w) * h,
                   std::numeric_limits<float>::infinity());

  const RigidTransform cam_from_world = camera.pose.inverse();
  const double aspect = static_cast<double>(w) / h;
  const double tan_half = std::tan(0.5 * camera.fov_y);

  const int r = splat_radius;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const LabeledPoint& point = cloud.points[i];
    const Vec3 in_cam = cam_from_world.apply(point.position);
    const double depth = -in_cam.z();
    if (!(depth > 0.0)) continue;  // behind or on the camera plane

    double ndc_x, ndc_y;  // [-1,1] across the frustum
    if (camera.kind == Camera::Kind::perspective) {
      ndc_x = in_cam.x() / (depth * tan_half * aspect);
      ndc_y = in_cam.y() / (depth * tan_half);
    } else {
      ndc_x = in_cam.x() / (camera.half_height * aspect);
      ndc_y = in_cam.y() / (camera.half_height);
    }
    const double px = (0.5 + 0.5 * ndc_x) * w;
    const double py = (0.5 - 0.5 * ndc_y) * h;  // image y grows downward
    const int cx = static_cast<int>(std::floor(px));
    const int cy = static_cast<int>(std::floor(py));
    if (cx < 0 || cx >= w || cy < 0 || cy >= h) continue;

    const float fdepth = static_cast<float>(depth);
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy > r * r) continue;
        const int x = cx + dx;
        const int y = cy + dy;
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        const std::size_t idx = map.pixel(x, y);
        // strict < keeps the earlier (lower-index) point on exact ties
        if (fdepth < map.depth[idx]) {
          map.depth[idx] = fdepth;
          map.instance[idx] = point.label;
          map.rgb[3 * idx + 0] = static_cast<float>(point.color.x());
          map.rgb[3 * idx + 1] = static_cast<float>(point.color.y());
          map.rgb[3 * idx + 2] = static_cast<float>(point.color.z());
        }
      }
    }
  }
  return map;
}

namespace {

Camera make_ortho(const std::string& name, const Vec3& right, const Vec3& up,
                  const Vec3& back, const Vec3& eye, double half_height,
                  int resolution) {
  Camera cam;
  cam.name = name;
  cam.kind = Camera::Kind::orthographic;
  cam.width = resolution;
  cam.height = resolution;
  cam.half_height = half_height;
  cam.pose.rotation.col(0) = right;
  cam.pose.rotation.col(1) = up;
  cam.pose.rotation.col(2) = back;
  cam.pose.translation = eye;
  return cam;
}

}  // namespace

std::vector<Camera> canonical_cameras(const LabeledPointCloud& cloud, int resolution) {
  if (cloud.empty()) throw Error(ErrorCode::empty_cloud, "canonical_cameras on empty cloud");

  const Aabb box = cloud.aabb();
  const Vec3 c = box.center();
  const Vec3 e = box.extent();
  const double margin = 1.1;
  const double standoff = 0.1 * box.diagonal() + 1e-3;
  const double aspect = 1.0;  // canonical views are square

  std::vector<Camera> cams;

  // Top-down: forward -y, image up = scene -z ("forward" stays up in the map).
  {
    const double hh = margin * std::max(e.x() / (2.0 * aspect), e.z() / 2.0);
    cams.push_back(make_ortho("top", Vec3(1, 0, 0), Vec3(0, 0, -1), Vec3(0, 1, 0),
                              Vec3(c.x(), box.max.y() + standoff, c.z()),
                              std::max(hh, 1e-9), resolution));
  }
  // Side view along +x: forward +x, up +y.
  {
    const double hh = margin * std::max(e.z() / (2.0 * aspect), e.y() / 2.0);
    cams.push_back(make_ortho("side_pos_x", Vec3(0, 0, 1), Vec3(0, 1, 0), Vec3(-1, 0, 0),
                              Vec3(box.min.x() - standoff, c.y(), c.z()),
                              std::max(hh, 1e-9), resolution));
  }
  // Side view along -x: forward -x, up +y.
  {
    const double hh = margin * std::max(e.z() / (2.0 * aspect), e.y() / 2.0);
    cams.push_back(make_ortho("side_neg_x", Vec3(0, 0, -1), Vec3(0, 1, 0), Vec3(1, 0, 0),
                              Vec3(box.max.x() + standoff, c.y(), c.z()),
                              std::max(hh, 1e-9), resolution));
  }
  return cams;
}

ExportedPointMap export_pointmap(const PointMap& map, const std::string& base_path) {
  ExportedPointMap out;
  out.rgb_png = base_path + ".rgb.png";
  out.instance_png = base_path + ".instance.png";
  out.depth_raw = base_path + ".depth.raw";
  out.depth_meta = base_path + ".depth.dim";

  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  std::vector<std::uint8_t> rgb8(n * 3);
  for (std::size_t i = 0; i < n * 3; ++i) {
    const float v = std::min(1.0f, std::max(0.0f, map.rgb[i]));
    rgb8[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  write_png_rgb8(out.rgb_png, map.width, map.height, rgb8);

  std::vector<std::uint16_t> gray(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (map.instance[i] > 0xffffu) {
      throw Error(ErrorCode::io_error,
                  "instance label " + std::to_string(map.instance[i]) +
                      " exceeds the 16-bit instance PNG range");
    }
    gray[i] = static_cast<std::uint16_t>(map.instance[i]);
  }
  write_png_gray16(out.instance_png, map.width, map.height, gray);

  {
    std::ofstream raw(out.depth_raw, std::ios::binary);
    if (!raw) throw Error(ErrorCode::io_error, "cannot write " + out.depth_raw);
    static_assert(sizeof(float) == 4);
    static_assert(std::endian::native == std::endian::little,
                  "depth dump is defined as little-endian float32");
    raw.write(reinterpret_cast<const char*>(map.depth.data()),
              static_cast<std::streamsize>(n * sizeof(float)));
    if (!raw) throw Error(ErrorCode::io_error, "short write on " + out.depth_raw);
  }
  {
    std::ofstream meta(out.depth_meta);
    if (!meta) throw Error(ErrorCode::io_error, "cannot write " + out.depth_meta);
    meta << map.width << ' ' << map.height << '\n';
  }
  return out;
}

std::vector<std::uint32_t> load_instance_png(const std::string& path, int& width,
                                             int& height) {
  const ImageGray16 img = read_png_gray16(path);
  width = img.width;
  height = img.height;
  return std::vector<std::uint32_t>(img.pixels.begin(), img.pixels.end());
}

}  // namespace sctx
