// SPDX-License-Identifier: Apache-2.0
#include "sctx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sctx/rng.hpp"

namespace sctx {

// ---------------------------------------------------------------------------
// Aabb
// ---------------------------------------------------------------------------
double Aabb::iou(const Aabb& other) const {
  if (empty() || other.empty()) return 0.0;
  const Vec3 lo = min.cwiseMax(other.min);
  const Vec3 hi = max.cwiseMin(other.max);
  const Vec3 overlap = (hi - lo).cwiseMax(0.0);
  const double inter = overlap.prod();
  const double vol_a = extent().prod();
  const double vol_b = other.extent().prod();
  const double uni = vol_a + vol_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------
bool SimilarityTransform::valid(double tol) const {
  if (!(scale > 0.0) || !std::isfinite(scale)) return false;
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b) {
  // apply(compose(a,b), p) == a.apply(b.apply(p))
  SimilarityTransform out;
  out.scale = a.scale * b.scale;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.scale * (a.rotation * b.translation) + a.translation;
  return out;
}

SimilarityTransform invert(const SimilarityTransform& t) {
  SimilarityTransform out;
  out.scale = 1.0 / t.scale;
  out.rotation = t.rotation.transpose();
  out.translation = -(out.scale * (out.rotation * t.translation));
  return out;
}

Mat3 yaw_rotation(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

// ---------------------------------------------------------------------------
// PCA OBB
// ---------------------------------------------------------------------------
namespace {

// Flip an axis so its first component of magnitude > tol is positive.
void fix_sign_lexicographic(Vec3& axis) {
  constexpr double tol = 1e-12;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(axis[k]) > tol) {
      if (axis[k] < 0.0) axis = -axis;
      return;
    }
  }
}

}  // namespace

Obb pca_obb(std::span<const Vec3> points) {
  if (points.size() < 3) {
    throw Error(ErrorCode::degenerate_geometry,
                "pca_obb needs at least 3 points, got " + std::to_string(points.size()));
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());

  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::degenerate_geometry, "covariance eigendecomposition failed");
  }
  // Eigen returns ascending eigenvalues; reorder descending.
  const Vec3 evals = solver.eigenvalues().reverse();
  Mat3 axes;
  axes.col(0) = solver.eigenvectors().col(2);
  axes.col(1) = solver.eigenvectors().col(1);
  axes.col(2) = solver.eigenvectors().col(0);

  // Collinear (or coincident) sets have no usable second axis. A planar set
  // still yields a well-defined frame with a zero third extent, so only the
  // mid eigenvalue is checked.
  if (!(evals[0] > 0.0) || evals[1] <= evals[0] * 1e-12) {
    throw Error(ErrorCode::degenerate_geometry, "rank-deficient point distribution");
  }

  for (int c = 0; c < 3; ++c) {
    Vec3 a = axes.col(c);
    fix_sign_lexicographic(a);
    axes.col(c) = a;
  }
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : points) {
    const Vec3 local = axes.transpose() * (p - mean);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }

  Obb box;
  box.axes = axes;
  box.half_extents = 0.5 * (hi - lo);
  box.center = mean + axes * (0.5 * (hi + lo));
  return box;
}

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------
namespace {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

double MeshInstance::total_area() const {
  double area = 0.0;
  for (const auto& t : triangles) {
    area += triangle_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
  }
  return area;
}

MeshInstance load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open OBJ file " + path);

  MeshInstance mesh;
  std::string line;
  std::size_t line_no = 0;
  auto resolve = [&](long idx) -> std::uint32_t {
    const long n = static_cast<long>(mesh.vertices.size());
    long v = idx > 0 ? idx - 1 : n + idx;
    if (v < 0 || v >= n) {
      throw Error(ErrorCode::parse_error,
                  path + ":" + std::to_string(line_no) + ": vertex index out of range");
    }
    return static_cast<std::uint32_t>(v);
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw Error(ErrorCode::parse_error,
                    path + ":" + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<std::uint32_t> face;
      std::string tok;
      while (ss >> tok) {
        // accept "i", "i/j", "i/j/k", "i//k"
        const std::string head = tok.substr(0, tok.find('/'));
        try {
          face.push_back(resolve(std::stol(head)));
        } catch (const std::invalid_argument&) {
          throw Error(ErrorCode::parse_error,
                      path + ":" + std::to_string(line_no) + ": malformed face index");
        }
      }
      if (face.size() < 3) {
        throw Error(ErrorCode::parse_error,
                    path + ":" + std::to_string(line_no) + ": face needs >= 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < face.size(); ++k) {
        mesh.triangles.push_back({face[0], face[k], face[k + 1]});
      }
    }
    // all other directives ignored
  }
  if (mesh.vertices.empty()) {
    throw Error(ErrorCode::parse_error, path + ": OBJ file has no vertices");
  }
  return mesh;
}

void save_obj(const MeshInstance& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot write OBJ file " + path);
  out.precision(17);
  for (const Vec3& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "short write on " + path);
}

// ---------------------------------------------------------------------------
// SpatialIndex
// ---------------------------------------------------------------------------
namespace {
constexpr std::uint32_t kLeafSize = 16;
}

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error(ErrorCode::empty_point_set, "SpatialIndex over empty set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    // keep leaves in ascending point-index order so scan ties stay stable
    std::sort(order_.begin() + begin, order_.begin() + end);
    nodes_.push_back(node);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.expand(points_[order_[i]]);
  int dim = 0;
  box.extent().maxCoeff(&dim);
  node.split_dim = static_cast<std::uint8_t>(dim);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][dim] < points_[b][dim];
                   });
  node.split_value = points_[order_[mid]][dim];

  const std::int32_t self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void SpatialIndex::search(std::int32_t node_id, const Vec3& query, Hit& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d = (points_[idx] - query).norm();
      if (d < best.distance || (d == best.distance && idx < best.index)) {
        best.distance = d;
        best.index = idx;
      }
    }
    return;
  }
  const double delta = query[node.split_dim] - node.split_value;
  const std::int32_t near = delta < 0.0 ? node.left : node.right;
  const std::int32_t far = delta < 0.0 ? node.right : node.left;
  search(near, query, best);
  // <= so equal-distance candidates on the far side can still win the
  // lower-index tie break
  if (std::abs(delta) <= best.distance) search(far, query, best);
}

SpatialIndex::Hit SpatialIndex::nearest(const Vec3& query) const {
  Hit best;
  best.index = points_.size();
  best.distance = std::numeric_limits<double>::infinity();
  search(root_, query, best);
  return best;
}

// ---------------------------------------------------------------------------
// Umeyama alignment
// ---------------------------------------------------------------------------
SimilarityTransform umeyama_align(std::span<const Vec3> src, std::span<const Vec3> dst,
                                  bool with_scale) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::degenerate_geometry, "umeyama_align size mismatch");
  }
  if (src.size() < 3) {
    throw Error(ErrorCode::degenerate_geometry, "umeyama_align needs >= 3 pairs");
  }
  Eigen::Matrix3Xd s(3, src.size()), d(3, dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    s.col(static_cast<Eigen::Index>(i)) = src[i];
    d.col(static_cast<Eigen::Index>(i)) = dst[i];
  }
  const Eigen::Matrix4d m = Eigen::umeyama(s, d, with_scale);
  const Mat3 linear = m.topLeftCorner<3, 3>();
  const double det = linear.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorCode::degenerate_geometry, "umeyama_align produced a singular map");
  }
  SimilarityTransform t;
  t.scale = std::cbrt(det);
  t.rotation = linear / t.scale;
  t.translation = m.topRightCorner<3, 1>();
  if (!t.valid(1e-6)) {
    throw Error(ErrorCode::degenerate_geometry, "umeyama_align produced a degenerate rotation");
  }
  // Re-orthonormalize so downstream det/orthogonality checks hold at 1e-9.
  Eigen::JacobiSVD<Mat3> svd(t.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  t.rotation = r;
  return t;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------
std::vector<Vec3> uniform_subsample(std::span<const Vec3> points, std::size_t n,
                                    std::uint64_t seed) {
  if (n >= points.size()) {
    return std::vector<Vec3>(points.begin(), points.end());
  }
  // Partial Fisher-Yates over an index vector; first n slots are the sample.
  std::vector<std::uint32_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(points[idx[i]]);
  return out;
}

std::vector<Vec3> sample_surface(const MeshInstance& mesh, std::size_t n,
                                 std::uint64_t seed) {
  std::vector<double> cumulative;
  cumulative.reserve(mesh.triangles.size());
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::degenerate_geometry, "sample_surface: mesh has zero total area");
  }

  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_double() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t tri =
        std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                              mesh.triangles.size() - 1);
    const auto& t = mesh.triangles[tri];
    double a = rng.next_double();
    double b = rng.next_double();
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    out.push_back(mesh.vertices[t[0]] +
                  a * (mesh.vertices[t[1]] - mesh.vertices[t[0]]) +
                  b * (mesh.vertices[t[2]] - mesh.vertices[t[0]]));
  }
  return out;
}

}  // namespace sctx
