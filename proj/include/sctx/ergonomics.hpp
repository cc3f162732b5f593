// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sctx/context.hpp"

namespace sctx {

struct OptimizerConfig {
  enum class RotationDofs { yaw_only, full };

  RotationDofs rotation_dofs = RotationDofs::yaw_only;
  int max_iterations = 500;
  double step_size = 1e-2;  // initial step; halving backtracking from there
  double grad_tolerance = 1e-6;
  int contact_samples = 512;
  std::uint64_t seed = 0;

  double fd_step = 1e-4;  // central-difference step, scene units / radians
  bool analytic_translation_gradients = false;
  int max_backtracks = 40;
};

struct EnergyBreakdown {
  struct Term {
    std::size_t ordinal = 0;
    Relation relation = Relation::contact;
    double weighted_loss = 0.0;
  };
  double total = 0.0;
  std::vector<Term> per_edge;
};

// ---------------------------------------------------------------------------
// Relation losses. Poses act rigidly: x-tilde = R x + t. Scale never appears
// here; scaled geometry is baked into the local points/centers beforehand.
// ---------------------------------------------------------------------------

/// [ min over pairs ||p~ - q~|| - eps ]+^2
double contact_loss(std::span<const Vec3> points_i, std::span<const Vec3> points_j,
                    const InstancePose& pose_i, const InstancePose& pose_j,
                    double epsilon);

/// Sum over all other instances of [ d_min - ||o~_v - o~_v'|| ]+^2
double clearance_loss(const PoseSet& poses, const std::map<std::uint32_t, Vec3>& centers,
                      std::uint32_t v, double d_min);

/// || A (o~_i - o~_j) ||^2 with A selecting the given axes.
double alignment_loss(const InstancePose& pose_i, const InstancePose& pose_j,
                      const Vec3& center_i, const Vec3& center_j, AxisMask axes);

/// || A_r ( (o~_i + o~_j)/2 - o~_k ) ||^2 along one world axis (0=x,1=y,2=z).
double symmetry_loss(const PoseSet& poses, const std::map<std::uint32_t, Vec3>& centers,
                     std::uint32_t vi, std::uint32_t vj, std::uint32_t vk, int axis);

/// ( a.(o~_i - o~_k) - a.(o~_j - o~_k) )^2 for a unit axis a.
double equidistance_loss(const PoseSet& poses,
                         const std::map<std::uint32_t, Vec3>& centers, std::uint32_t vi,
                         std::uint32_t vj, std::uint32_t vk, const Vec3& axis);

// ---------------------------------------------------------------------------
// Whole-graph energy
// ---------------------------------------------------------------------------

/// Weighted sum over hyperedges of the relation losses, evaluated with the
/// given poses. Local per-instance geometry (centers, contact samples) is
/// derived from the context's stored poses; missing relation parameters
/// fall back to the documented defaults (eps 0.01, d_min = half the largest
/// AABB extent, alignment axes xz, symmetry axis x, equidistance axis +x).
EnergyBreakdown total_energy(const SpatialContext& context, const PoseSet& poses,
                             const OptimizerConfig& config);

struct OptimizeTrace {
  struct Row {
    int iteration = 0;
    double total_energy = 0.0;
    double step_size = 0.0;
    bool accepted = false;
  };
  std::vector<Row> rows;
  std::string to_csv() const;
};

/// First-order descent over per-instance rigid pose parameters (translation
/// plus yaw, or axis-angle when rotation_dofs=full) with central-difference
/// gradients and halving backtracking. Accepted steps never increase the
/// energy. Final poses are written back into the context; instance cloud
/// segments move with them.
std::pair<SpatialContext, OptimizeTrace> optimize_poses(const SpatialContext& context,
                                                        const OptimizerConfig& config);

/// Analytic d(total energy)/d(translation) per instance, valid away from the
/// contact/clearance hinge kinks. Cross-checked against central differences.
std::map<std::uint32_t, Vec3> energy_translation_gradient(const SpatialContext& context,
                                                          const PoseSet& poses,
                                                          const OptimizerConfig& config);

}  // namespace sctx
