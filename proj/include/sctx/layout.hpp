// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sctx/context.hpp"
#include "sctx/geometry.hpp"

namespace sctx {

struct IcpParams {
  int max_iterations = 50;
  double rel_tolerance = 1e-6;
  int subsample_mesh = 2048;
  int subsample_target = 2048;
  bool with_scale = true;
  std::uint64_t seed = 0;

  // Non-default behaviors, all off unless asked for.
  bool resample_each_iteration = false;  // breaks the monotone-descent guarantee
  double trim_fraction = 0.0;            // correspondence outlier trimming
  bool full_orientation_search = false;  // 24 box orientations instead of 4 yaws
  double min_scale = 0.1;
  double max_scale = 10.0;
};

struct AlignmentResult {
  SimilarityTransform transform;
  double objective = 0.0;  // final value on the fixed subsample
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  // value after init and each accepted update
};

/// Sum of squared distances from each transformed point to its nearest
/// neighbor in the target set.
double alignment_objective(const SimilarityTransform& transform,
                           std::span<const Vec3> points, const SpatialIndex& target);

/// Coarse start: centroids matched, mesh OBB axes mapped onto target OBB
/// axes, scale from the OBB diagonal ratio. Among the yaw-preserving axis
/// assignments (0/90/180/270 degrees about the target's vertical OBB axis,
/// or all 24 box orientations when full_search is on) the candidate with
/// the lowest objective wins.
SimilarityTransform init_alignment(const MeshInstance& mesh,
                                   const LabeledPointCloud& target,
                                   bool full_search = false);

/// Point-to-point ICP with a closed-form similarity update per iteration.
/// Mesh vertices and target points are subsampled once (per params/seed);
/// on that fixed subsample the objective is non-increasing across
/// iterations.
AlignmentResult icp_refine(const MeshInstance& mesh, const LabeledPointCloud& target,
                           const SimilarityTransform& initial, const IcpParams& params);

struct LayoutReport {
  struct Failure {
    std::uint32_t id = 0;
    ErrorCode code = ErrorCode::invalid_argument;
    std::string message;
  };
  std::map<std::uint32_t, AlignmentResult> results;
  std::vector<Failure> failures;
};

/// Aligns every mesh to its instance segment independently and stores the
/// recovered world pose (and the mesh) in the returned context. A failing
/// instance is reported and skipped; the others still complete.
std::pair<SpatialContext, LayoutReport> plan_layout(
    const SpatialContext& context, const std::map<std::uint32_t, MeshInstance>& meshes,
    const IcpParams& params);

}  // namespace sctx
