// SPDX-License-Identifier: Apache-2.0
#include "sctx/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sctx {

namespace {

constexpr std::uint64_t kSeedMix = 0x9e3779b97f4a7c15ull;

std::vector<Vec3> cloud_positions(const LabeledPointCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.push_back(p.position);
  return out;
}

Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

/// The 24 proper rotations of a box frame as signed axis permutations.
std::vector<Mat3> box_orientations() {
  std::vector<Mat3> out;
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& perm : perms) {
    for (int signs = 0; signs < 8; ++signs) {
      Mat3 m = Mat3::Zero();
      for (int c = 0; c < 3; ++c) {
        m(perm[c], c) = (signs >> c) & 1 ? -1.0 : 1.0;
      }
      if (m.determinant() > 0.0) out.push_back(m);
    }
  }
  return out;
}

}  // namespace

double alignment_objective(const SimilarityTransform& transform,
                           std::span<const Vec3> points, const SpatialIndex& target) {
  if (points.empty()) {
    throw Error(ErrorCode::empty_point_set, "alignment_objective over empty point set");
  }
  double sum = 0.0;
  for (const Vec3& p : points) {
    const Vec3 moved = transform.apply(p);
    const auto hit = target.nearest(moved);
    sum += hit.distance * hit.distance;
  }
  return sum;
}

SimilarityTransform init_alignment(const MeshInstance& mesh,
                                   const LabeledPointCloud& target, bool full_search) {
  if (mesh.vertices.empty()) {
    throw Error(ErrorCode::degenerate_geometry, "init_alignment: mesh has no vertices");
  }
  const std::vector<Vec3> target_pts = cloud_positions(target);
  if (target_pts.size() < 3) {
    throw Error(ErrorCode::degenerate_geometry,
                "init_alignment: target needs at least 3 points");
  }

  const Obb mesh_box = pca_obb(mesh.vertices);
  const Obb target_box = pca_obb(target_pts);

  const double mesh_diag = mesh_box.diagonal();
  if (!(mesh_diag > 0.0)) {
    throw Error(ErrorCode::degenerate_geometry, "init_alignment: degenerate mesh extent");
  }
  const double scale = target_box.diagonal() / mesh_diag;

  const Mat3 base = target_box.axes * mesh_box.axes.transpose();
  std::vector<Mat3> candidates;
  if (full_search) {
    for (const Mat3& perm : box_orientations()) {
      candidates.push_back(target_box.axes * perm * mesh_box.axes.transpose());
    }
  } else {
    // Vertical OBB axis of the target: the one closest to world +y.
    int up_col = 0;
    Vec3(target_box.axes.row(1)).cwiseAbs().maxCoeff(&up_col);
    Vec3 up = target_box.axes.col(up_col);
    if (up.y() < 0.0) up = -up;
    for (int quarter = 0; quarter < 4; ++quarter) {
      const double angle = quarter * (M_PI / 2.0);
      const Mat3 spin = Eigen::AngleAxisd(angle, up).toRotationMatrix();
      candidates.push_back(spin * base);
    }
  }

  // Evaluate candidates on bounded subsets; deterministic internal seeds.
  const std::vector<Vec3> mesh_eval = uniform_subsample(mesh.vertices, 512, 7);
  const std::vector<Vec3> target_eval = uniform_subsample(target_pts, 2048, 11);
  const SpatialIndex target_index(target_eval);
  const Vec3 mesh_center = centroid(mesh.vertices);
  const Vec3 target_center = centroid(target_pts);

  SimilarityTransform best;
  double best_objective = std::numeric_limits<double>::infinity();
  for (const Mat3& rotation : candidates) {
    SimilarityTransform t;
    t.scale = scale;
    t.rotation = rotation;
    t.translation = target_center - scale * (rotation * mesh_center);
    const double obj = alignment_objective(t, mesh_eval, target_index);
    if (obj < best_objective) {
      best_objective = obj;
      best = t;
    }
  }
  return best;
}

AlignmentResult icp_refine(const MeshInstance& mesh, const LabeledPointCloud& target,
                           const SimilarityTransform& initial, const IcpParams& params) {
  if (params.max_iterations < 1 || params.subsample_mesh < 1 || params.subsample_target < 1) {
    throw Error(ErrorCode::invalid_argument, "icp_refine: counts must be >= 1");
  }
  if (!(params.rel_tolerance > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "icp_refine: rel_tolerance must be positive");
  }
  if (mesh.vertices.size() < 3 || target.points.size() < 3) {
    throw Error(ErrorCode::degenerate_geometry, "icp_refine: needs >= 3 points on both sides");
  }

  const std::vector<Vec3> all_target = cloud_positions(target);
  auto draw = [&](std::uint64_t salt) {
    return std::pair{
        uniform_subsample(mesh.vertices, static_cast<std::size_t>(params.subsample_mesh),
                          params.seed ^ salt),
        uniform_subsample(all_target, static_cast<std::size_t>(params.subsample_target),
                          (params.seed + kSeedMix) ^ salt)};
  };

  auto [mesh_pts, target_pts] = draw(0);
  SpatialIndex index(target_pts);

  AlignmentResult result;
  result.transform = initial;
  double objective = alignment_objective(initial, mesh_pts, index);
  result.objective_history.push_back(objective);

  std::vector<Vec3> matched(mesh_pts.size());
  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    if (params.resample_each_iteration && iter > 1) {
      std::tie(mesh_pts, target_pts) = draw(static_cast<std::uint64_t>(iter));
      index = SpatialIndex(target_pts);
      objective = alignment_objective(result.transform, mesh_pts, index);
      matched.resize(mesh_pts.size());
    }

    for (std::size_t i = 0; i < mesh_pts.size(); ++i) {
      const Vec3 moved = result.transform.apply(mesh_pts[i]);
      matched[i] = target_pts[index.nearest(moved).index];
    }

    std::span<const Vec3> src(mesh_pts);
    std::span<const Vec3> dst(matched);
    std::vector<Vec3> trimmed_src, trimmed_dst;
    if (params.trim_fraction > 0.0) {
      std::vector<std::size_t> order(mesh_pts.size());
      std::iota(order.begin(), order.end(), 0u);
      std::vector<double> residual(mesh_pts.size());
      for (std::size_t i = 0; i < mesh_pts.size(); ++i) {
        residual[i] = (result.transform.apply(mesh_pts[i]) - matched[i]).squaredNorm();
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return residual[a] < residual[b]; });
      const std::size_t keep = std::max<std::size_t>(
          3, static_cast<std::size_t>(
                 std::llround((1.0 - params.trim_fraction) * mesh_pts.size())));
      for (std::size_t i = 0; i < std::min(keep, order.size()); ++i) {
        trimmed_src.push_back(mesh_pts[order[i]]);
        trimmed_dst.push_back(matched[order[i]]);
      }
      src = trimmed_src;
      dst = trimmed_dst;
    }

    SimilarityTransform updated = umeyama_align(src, dst, params.with_scale);
    if (updated.scale < params.min_scale || updated.scale > params.max_scale) {
      const double clamped = std::clamp(updated.scale, params.min_scale, params.max_scale);
      // re-center the translation for the clamped scale
      const Vec3 src_mean = centroid(src);
      const Vec3 dst_mean = centroid(dst);
      updated.scale = clamped;
      updated.translation = dst_mean - clamped * (updated.rotation * src_mean);
    }

    const double next = alignment_objective(updated, mesh_pts, index);
    if (!std::isfinite(next)) {
      throw Error(ErrorCode::non_finite, "icp_refine objective became non-finite");
    }
    if (next > objective) {
      // only possible through clamping/trimming; keep the better transform
      result.converged = false;
      break;
    }
    result.transform = updated;
    result.iterations = iter;
    result.objective_history.push_back(next);
    const double rel_change = (objective - next) / std::max(objective, 1e-300);
    objective = next;
    if (rel_change <= params.rel_tolerance) {
      result.converged = true;
      break;
    }
  }
  result.objective = objective;
  return result;
}

std::pair<SpatialContext, LayoutReport> plan_layout(
    const SpatialContext& context, const std::map<std::uint32_t, MeshInstance>& meshes,
    const IcpParams& params) {
  SpatialContext out = context;
  LayoutReport report;
  for (const auto& [id, mesh] : meshes) {
    try {
      const LabeledPointCloud segment = extract_instance(context, id);
      IcpParams per_instance = params;
      per_instance.seed = params.seed ^ (static_cast<std::uint64_t>(id) * kSeedMix);
      const SimilarityTransform start =
          init_alignment(mesh, segment, params.full_orientation_search);
      AlignmentResult result = icp_refine(mesh, segment, start, per_instance);

      InstancePose pose;
      pose.scale = result.transform.scale;
      pose.rotation = Eigen::Quaterniond(result.transform.rotation).normalized();
      pose.translation = result.transform.translation;
      out.poses[id] = pose;
      out.meshes[id] = mesh;
      report.results[id] = std::move(result);
    } catch (const Error& err) {
      report.failures.push_back({id, err.code(), err.what()});
    }
  }
  return {out, report};
}

}  // namespace sctx
