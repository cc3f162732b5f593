// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sctx/error.hpp"

namespace sctx {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Hinge [x]+ = max(0, x).
inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

// ---------------------------------------------------------------------------
// Axis-aligned bounding box
// ---------------------------------------------------------------------------
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool empty() const { return !(min.x() <= max.x()); }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p, double slack = 0.0) const {
    return (p.array() >= min.array() - slack).all() &&
           (p.array() <= max.array() + slack).all();
  }

  /// Volume IoU of two boxes; 0 when either is empty or they do not overlap.
  double iou(const Aabb& other) const;

  static Aabb of(std::span<const Vec3> points) {
    Aabb box;
    for (const Vec3& p : points) box.expand(p);
    return box;
  }
};

// ---------------------------------------------------------------------------
// Rigid and similarity transforms
// ---------------------------------------------------------------------------
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  RigidTransform compose(const RigidTransform& other) const {
    // (*this) after `other`: apply(other.apply(p))
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
};

/// s R p + t with s > 0, R in SO(3).
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  bool valid(double tol = 1e-9) const;
};

SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b);
SimilarityTransform invert(const SimilarityTransform& t);
inline Vec3 apply_similarity(const SimilarityTransform& t, const Vec3& p) { return t.apply(p); }

/// Rotation by `angle` about the world +y axis (the scene vertical).
Mat3 yaw_rotation(double angle);

// ---------------------------------------------------------------------------
// Oriented bounding box
// ---------------------------------------------------------------------------
struct Obb {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();  // columns, right-handed, eigenvalue-descending
  Vec3 half_extents = Vec3::Zero();

  double diagonal() const { return 2.0 * half_extents.norm(); }
  bool contains(const Vec3& p, double slack = 0.0) const {
    const Vec3 local = axes.transpose() * (p - center);
    return (local.array().abs() <= half_extents.array() + slack).all();
  }
};

/// PCA box fit. Axes are covariance eigenvectors in descending eigenvalue
/// order, sign-fixed lexicographically against +x,+y,+z and then flipped on
/// the last axis if needed to keep the frame right-handed. Throws
/// DegenerateGeometry for fewer than 3 points or a collinear point set.
Obb pca_obb(std::span<const Vec3> points);

// ---------------------------------------------------------------------------
// Triangle mesh
// ---------------------------------------------------------------------------
struct MeshInstance {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::uint32_t label = 0;

  double total_area() const;
};

/// Minimal OBJ reader: "v x y z" and "f i j k" (1-based; polygons are
/// fan-triangulated; negative indices count from the end; every other
/// directive is ignored).
MeshInstance load_obj(const std::string& path);
void save_obj(const MeshInstance& mesh, const std::string& path);

// ---------------------------------------------------------------------------
// Nearest-neighbor index (kd-tree over a fixed point set)
// ---------------------------------------------------------------------------
class SpatialIndex {
 public:
  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  /// Throws EmptyPointSet on an empty input.
  explicit SpatialIndex(std::vector<Vec3> points);

  /// Closest stored point by Euclidean distance; exact ties resolve to the
  /// lowest point index, matching a linear scan.
  Hit nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t begin = 0;  // leaf range into order_
    std::uint32_t end = 0;
    std::uint8_t split_dim = 0;
    double split_value = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& query, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

// ---------------------------------------------------------------------------
// Alignment and sampling
// ---------------------------------------------------------------------------

/// Least-squares similarity (or rigid when with_scale is off) transform
/// mapping src onto dst for matched pairs. Throws DegenerateGeometry when
/// sizes mismatch, fewer than 3 pairs are given, or the source is collinear.
SimilarityTransform umeyama_align(std::span<const Vec3> src, std::span<const Vec3> dst,
                                  bool with_scale);

/// n points without replacement, uniform, deterministic per seed. Returns
/// the whole set (in input order) when n >= |points|.
std::vector<Vec3> uniform_subsample(std::span<const Vec3> points, std::size_t n,
                                    std::uint64_t seed);

/// n surface points, area-proportional across triangles and
/// barycentric-uniform within each, deterministic per seed. Throws
/// DegenerateGeometry when the mesh has no positive-area triangle.
std::vector<Vec3> sample_surface(const MeshInstance& mesh, std::size_t n,
                                 std::uint64_t seed);

}  // namespace sctx
