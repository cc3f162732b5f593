// SPDX-License-Identifier: Apache-2.0
#include "sctx/ergonomics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sctx/strings.hpp"

namespace sctx {

namespace {

constexpr std::uint64_t kSeedMix = 0x9e3779b97f4a7c15ull;
constexpr double kDefaultEpsilon = 0.01;

}  // namespace

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------
double contact_loss(std::span<const Vec3> points_i, std::span<const Vec3> points_j,
                    const InstancePose& pose_i, const InstancePose& pose_j,
                    double epsilon) {
  if (points_i.empty() || points_j.empty()) {
    throw Error(ErrorCode::empty_point_set, "contact_loss with an empty sample set");
  }
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "contact_loss requires epsilon > 0");
  }
  const RigidTransform ti = pose_i.rigid();
  const RigidTransform tj = pose_j.rigid();

  std::vector<Vec3> moved_j;
  moved_j.reserve(points_j.size());
  for (const Vec3& q : points_j) moved_j.push_back(tj.apply(q));

  double best_sq = std::numeric_limits<double>::infinity();
  for (const Vec3& p : points_i) {
    const Vec3 mp = ti.apply(p);
    for (const Vec3& mq : moved_j) {
      best_sq = std::min(best_sq, (mp - mq).squaredNorm());
    }
  }
  const double h = hinge(std::sqrt(best_sq) - epsilon);
  return h * h;
}

namespace {

Vec3 world_center(const PoseSet& poses, const std::map<std::uint32_t, Vec3>& centers,
                  std::uint32_t v) {
  const auto c = centers.find(v);
  if (c == centers.end()) {
    throw Error(ErrorCode::unknown_instance,
                "no center stored for instance " + std::to_string(v));
  }
  const auto p = poses.find(v);
  if (p == poses.end()) {
    throw Error(ErrorCode::missing_pose,
                "no pose stored for instance " + std::to_string(v));
  }
  return p->second.rigid().apply(c->second);
}

}  // namespace

double clearance_loss(const PoseSet& poses, const std::map<std::uint32_t, Vec3>& centers,
                      std::uint32_t v, double d_min) {
  if (!(d_min > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "clearance_loss requires d_min > 0");
  }
  const Vec3 own = world_center(poses, centers, v);
  double sum = 0.0;
  for (const auto& [other, local] : centers) {
    if (other == v) continue;
    const double h = hinge(d_min - (own - world_center(poses, centers, other)).norm());
    sum += h * h;
  }
  return sum;
}

double alignment_loss(const InstancePose& pose_i, const InstancePose& pose_j,
                      const Vec3& center_i, const Vec3& center_j, AxisMask axes) {
  if (axes.count() == 0) {
    throw Error(ErrorCode::invalid_argument, "alignment_loss with an empty axis selector");
  }
  const Vec3 d = pose_i.rigid().apply(center_i) - pose_j.rigid().apply(center_j);
  double sum = 0.0;
  if (axes.x) sum += d.x() * d.x();
  if (axes.y) sum += d.y() * d.y();
  if (axes.z) sum += d.z() * d.z();
  return sum;
}

double symmetry_loss(const PoseSet& poses, const std::map<std::uint32_t, Vec3>& centers,
                     std::uint32_t vi, std::uint32_t vj, std::uint32_t vk, int axis) {
  if (vi == vj || vi == vk || vj == vk) {
    throw Error(ErrorCode::duplicate_members, "symmetry members must be distinct");
  }
  if (axis < 0 || axis > 2) {
    throw Error(ErrorCode::invalid_argument, "symmetry axis must be 0, 1 or 2");
  }
  const Vec3 oi = world_center(poses, centers, vi);
  const Vec3 oj = world_center(poses, centers, vj);
  const Vec3 ok = world_center(poses, centers, vk);
  const double d = 0.5 * (oi[axis] + oj[axis]) - ok[axis];
  return d * d;
}

double equidistance_loss(const PoseSet& poses,
                         const std::map<std::uint32_t, Vec3>& centers, std::uint32_t vi,
                         std::uint32_t vj, std::uint32_t vk, const Vec3& axis) {
  if (vi == vj || vi == vk || vj == vk) {
    throw Error(ErrorCode::duplicate_members, "equidistance members must be distinct");
  }
  if (std::abs(axis.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::non_unit_axis, "equidistance axis must be unit length");
  }
  const Vec3 oi = world_center(poses, centers, vi);
  const Vec3 oj = world_center(poses, centers, vj);
  const Vec3 ok = world_center(poses, centers, vk);
  const double d = axis.dot(oi - ok) - axis.dot(oj - ok);
  return d * d;
}

// ---------------------------------------------------------------------------
// Energy model: local geometry resolved once, then evaluated per pose set
// ---------------------------------------------------------------------------
namespace {

struct EnergyModel {
  const SpatialContext* context = nullptr;
  OptimizerConfig config;
  std::map<std::uint32_t, Vec3> local_centers;
  std::map<std::uint32_t, double> default_dmin;
  std::map<std::uint32_t, std::vector<Vec3>> contact_samples;  // only where needed

  EnergyBreakdown evaluate(const PoseSet& poses) const;
};

InstancePose stored_or_identity(const SpatialContext& ctx, std::uint32_t id) {
  const auto it = ctx.poses.find(id);
  return it == ctx.poses.end() ? InstancePose{} : it->second;
}

/// Instance geometry in its own local frame: scaled mesh vertices when a
/// mesh is present, otherwise cloud points pulled back through the stored
/// rigid pose (identity when none is stored).
std::vector<Vec3> local_points(const SpatialContext& ctx, std::uint32_t id) {
  std::vector<Vec3> pts;
  const auto mesh_it = ctx.meshes.find(id);
  if (mesh_it != ctx.meshes.end() && !mesh_it->second.vertices.empty()) {
    const double s = stored_or_identity(ctx, id).scale;
    pts.reserve(mesh_it->second.vertices.size());
    for (const Vec3& v : mesh_it->second.vertices) pts.push_back(s * v);
    return pts;
  }
  const RigidTransform pullback = stored_or_identity(ctx, id).rigid().inverse();
  for (const auto& p : ctx.cloud.points) {
    if (p.label == id) pts.push_back(pullback.apply(p.position));
  }
  return pts;
}

EnergyModel build_model(const SpatialContext& ctx, const OptimizerConfig& config) {
  EnergyModel model;
  model.context = &ctx;
  model.config = config;

  for (const auto& [id, node] : ctx.graph.nodes) {
    const std::vector<Vec3> pts = local_points(ctx, id);
    if (pts.empty()) continue;  // planned instance without geometry
    const Aabb box = Aabb::of(pts);
    model.local_centers[id] = box.center();
    model.default_dmin[id] = std::max(0.5 * box.extent().maxCoeff(), 1e-9);
  }

  for (const HyperEdge& edge : ctx.graph.edges) {
    if (edge.relation != Relation::contact) continue;
    for (std::uint32_t m : edge.members) {
      if (model.contact_samples.count(m)) continue;
      const auto mesh_it = ctx.meshes.find(m);
      if (mesh_it == ctx.meshes.end()) {
        throw Error(ErrorCode::missing_mesh,
                    "contact edge on instance " + std::to_string(m) +
                        " which has no mesh");
      }
      const MeshInstance& mesh = mesh_it->second;
      const double s = stored_or_identity(ctx, m).scale;
      std::vector<Vec3> samples;
      if (mesh.total_area() > 0.0) {
        MeshInstance scaled = mesh;
        for (Vec3& v : scaled.vertices) v *= s;
        samples = sample_surface(scaled, static_cast<std::size_t>(config.contact_samples),
                                 config.seed ^ (static_cast<std::uint64_t>(m) * kSeedMix));
      } else {
        // degenerate meshes contribute their (scaled) vertices directly
        samples.reserve(mesh.vertices.size());
        for (const Vec3& v : mesh.vertices) samples.push_back(s * v);
      }
      model.contact_samples[m] = std::move(samples);
    }
  }
  return model;
}

EnergyBreakdown EnergyModel::evaluate(const PoseSet& poses) const {
  const SpatialContext& ctx = *context;

  // Poses for non-member instances referenced by clearance sums fall back
  // to the stored pose; edge members themselves must be present in `poses`.
  PoseSet effective = poses;
  for (const auto& [id, center] : local_centers) {
    if (!effective.count(id)) effective[id] = stored_or_identity(ctx, id);
  }

  EnergyBreakdown breakdown;
  for (std::size_t e = 0; e < ctx.graph.edges.size(); ++e) {
    const HyperEdge& edge = ctx.graph.edges[e];
    for (std::uint32_t m : edge.members) {
      if (!poses.count(m)) {
        throw Error(ErrorCode::missing_pose,
                    "edge " + std::to_string(e) + " member " + std::to_string(m) +
                        " has no pose");
      }
    }

    double loss = 0.0;
    switch (edge.relation) {
      case Relation::contact: {
        const auto& si = contact_samples.at(edge.members[0]);
        const auto& sj = contact_samples.at(edge.members[1]);
        const double eps = edge.params.epsilon.value_or(kDefaultEpsilon);
        loss = contact_loss(si, sj, effective.at(edge.members[0]),
                            effective.at(edge.members[1]), eps);
        break;
      }
      case Relation::clearance: {
        const std::uint32_t v = edge.members[0];
        const double d_min = edge.params.clearance_radius.value_or(
            default_dmin.count(v) ? default_dmin.at(v) : 1e-9);
        loss = clearance_loss(effective, local_centers, v, d_min);
        break;
      }
      case Relation::alignment: {
        const AxisMask axes = edge.params.axes.value_or(AxisMask{true, false, true});
        const std::uint32_t vi = edge.members[0];
        const std::uint32_t vj = edge.members[1];
        loss = alignment_loss(effective.at(vi), effective.at(vj), local_centers.at(vi),
                              local_centers.at(vj), axes);
        break;
      }
      case Relation::symmetry: {
        const AxisMask mask = edge.params.axes.value_or(AxisMask{true, false, false});
        const int axis = mask.x ? 0 : (mask.y ? 1 : 2);
        loss = symmetry_loss(effective, local_centers, edge.members[0], edge.members[1],
                             edge.members[2], axis);
        break;
      }
      case Relation::equidistance: {
        const Vec3 axis = edge.params.axis.value_or(Vec3(1, 0, 0));
        loss = equidistance_loss(effective, local_centers, edge.members[0],
                                 edge.members[1], edge.members[2], axis);
        break;
      }
    }
    breakdown.per_edge.push_back({e, edge.relation, edge.weight * loss});
    breakdown.total += edge.weight * loss;
  }
  return breakdown;
}

}  // namespace

EnergyBreakdown total_energy(const SpatialContext& context, const PoseSet& poses,
                             const OptimizerConfig& config) {
  return build_model(context, config).evaluate(poses);
}

// ---------------------------------------------------------------------------
// Analytic translation gradient (smooth away from hinge kinks)
// ---------------------------------------------------------------------------
namespace {

std::map<std::uint32_t, Vec3> translation_gradient(const EnergyModel& model,
                                                   const PoseSet& poses) {
  const SpatialContext& ctx = *model.context;
  PoseSet effective = poses;
  for (const auto& [id, center] : model.local_centers) {
    if (!effective.count(id)) effective[id] = stored_or_identity(ctx, id);
  }
  auto center_of = [&](std::uint32_t v) {
    return effective.at(v).rigid().apply(model.local_centers.at(v));
  };

  std::map<std::uint32_t, Vec3> grad;
  for (const auto& [id, pose] : poses) grad[id] = Vec3::Zero();
  auto accumulate = [&](std::uint32_t v, const Vec3& g) {
    const auto it = grad.find(v);
    if (it != grad.end()) it->second += g;
  };

  for (const HyperEdge& edge : ctx.graph.edges) {
    const double w = edge.weight;
    switch (edge.relation) {
      case Relation::contact: {
        const std::uint32_t vi = edge.members[0];
        const std::uint32_t vj = edge.members[1];
        const auto& si = model.contact_samples.at(vi);
        const auto& sj = model.contact_samples.at(vj);
        const RigidTransform ti = effective.at(vi).rigid();
        const RigidTransform tj = effective.at(vj).rigid();
        double best_sq = std::numeric_limits<double>::infinity();
        Vec3 diff = Vec3::Zero();
        for (const Vec3& p : si) {
          const Vec3 mp = ti.apply(p);
          for (const Vec3& q : sj) {
            const Vec3 d = mp - tj.apply(q);
            const double sq = d.squaredNorm();
            if (sq < best_sq) {
              best_sq = sq;
              diff = d;
            }
          }
        }
        const double dist = std::sqrt(best_sq);
        const double eps = edge.params.epsilon.value_or(kDefaultEpsilon);
        if (dist > eps && dist > 0.0) {
          const Vec3 g = 2.0 * w * (dist - eps) * (diff / dist);
          accumulate(vi, g);
          accumulate(vj, -g);
        }
        break;
      }
      case Relation::clearance: {
        const std::uint32_t v = edge.members[0];
        const double d_min = edge.params.clearance_radius.value_or(
            model.default_dmin.count(v) ? model.default_dmin.at(v) : 1e-9);
        const Vec3 own = center_of(v);
        for (const auto& [other, local] : model.local_centers) {
          if (other == v) continue;
          const Vec3 d = own - center_of(other);
          const double dist = d.norm();
          if (dist < d_min && dist > 0.0) {
            const Vec3 g = -2.0 * w * (d_min - dist) * (d / dist);
            accumulate(v, g);
            accumulate(other, -g);
          }
        }
        break;
      }
      case Relation::alignment: {
        const AxisMask axes = edge.params.axes.value_or(AxisMask{true, false, true});
        const Vec3 d = center_of(edge.members[0]) - center_of(edge.members[1]);
        Vec3 projected = Vec3::Zero();
        if (axes.x) projected.x() = d.x();
        if (axes.y) projected.y() = d.y();
        if (axes.z) projected.z() = d.z();
        accumulate(edge.members[0], 2.0 * w * projected);
        accumulate(edge.members[1], -2.0 * w * projected);
        break;
      }
      case Relation::symmetry: {
        const AxisMask mask = edge.params.axes.value_or(AxisMask{true, false, false});
        const int axis = mask.x ? 0 : (mask.y ? 1 : 2);
        const double d = 0.5 * (center_of(edge.members[0])[axis] +
                                center_of(edge.members[1])[axis]) -
                         center_of(edge.members[2])[axis];
        Vec3 unit = Vec3::Zero();
        unit[axis] = 1.0;
        accumulate(edge.members[0], w * d * unit);
        accumulate(edge.members[1], w * d * unit);
        accumulate(edge.members[2], -2.0 * w * d * unit);
        break;
      }
      case Relation::equidistance: {
        const Vec3 axis = edge.params.axis.value_or(Vec3(1, 0, 0));
        const double d = axis.dot(center_of(edge.members[0]) - center_of(edge.members[2])) -
                         axis.dot(center_of(edge.members[1]) - center_of(edge.members[2]));
        accumulate(edge.members[0], 2.0 * w * d * axis);
        accumulate(edge.members[1], -2.0 * w * d * axis);
        break;
      }
    }
  }
  return grad;
}

}  // namespace

std::map<std::uint32_t, Vec3> energy_translation_gradient(const SpatialContext& context,
                                                          const PoseSet& poses,
                                                          const OptimizerConfig& config) {
  return translation_gradient(build_model(context, config), poses);
}

// ---------------------------------------------------------------------------
// Pose optimizer
// ---------------------------------------------------------------------------
std::string OptimizeTrace::to_csv() const {
  std::string out = "iteration,total_energy,step_size,accepted\n";
  for (const Row& row : rows) {
    out += std::to_string(row.iteration) + ',' + format_double(row.total_energy) + ',' +
           format_double(row.step_size) + ',' + (row.accepted ? "1" : "0") + '\n';
  }
  return out;
}

namespace {

struct PoseParam {
  std::uint32_t id = 0;
  InstancePose base;  // entry pose; rotation deltas compose on the left
};

PoseSet poses_from_vector(const std::vector<PoseParam>& layout,
                          const std::vector<double>& x, bool full_rotation) {
  const std::size_t dof = full_rotation ? 6 : 4;
  PoseSet poses;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const double* v = x.data() + i * dof;
    InstancePose pose = layout[i].base;
    Mat3 delta;
    if (full_rotation) {
      const Vec3 omega(v[3], v[4], v[5]);
      const double angle = omega.norm();
      delta = angle < 1e-14
                  ? Mat3::Identity()
                  : Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
    } else {
      delta = yaw_rotation(v[3]);
    }
    pose.rotation =
        Eigen::Quaterniond(delta * layout[i].base.rotation.toRotationMatrix()).normalized();
    pose.translation = Vec3(v[0], v[1], v[2]);
    poses[layout[i].id] = pose;
  }
  return poses;
}

}  // namespace

std::pair<SpatialContext, OptimizeTrace> optimize_poses(const SpatialContext& context,
                                                        const OptimizerConfig& config) {
  const ValidationReport report = validate(context);
  if (!report.ok()) {
    throw Error(ErrorCode::validation_failed,
                "context does not validate:\n" + report.to_text());
  }

  OptimizeTrace trace;
  if (context.graph.edges.empty()) {
    return {context, trace};  // nothing to optimize
  }

  const EnergyModel model = build_model(context, config);

  std::vector<PoseParam> layout;
  for (const auto& [id, node] : context.graph.nodes) {
    if (!model.local_centers.count(id) && !model.contact_samples.count(id)) continue;
    layout.push_back({id, stored_or_identity(context, id)});
  }
  const bool full_rotation = config.rotation_dofs == OptimizerConfig::RotationDofs::full;
  const std::size_t dof = full_rotation ? 6 : 4;

  std::vector<double> x(layout.size() * dof, 0.0);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    x[i * dof + 0] = layout[i].base.translation.x();
    x[i * dof + 1] = layout[i].base.translation.y();
    x[i * dof + 2] = layout[i].base.translation.z();
  }

  auto energy_at = [&](const std::vector<double>& v) {
    return model.evaluate(poses_from_vector(layout, v, full_rotation)).total;
  };

  double energy = energy_at(x);
  if (!std::isfinite(energy)) {
    throw Error(ErrorCode::non_finite, "initial pose energy is non-finite");
  }

  double step = config.step_size;
  std::vector<double> grad(x.size(), 0.0);
  std::vector<double> probe(x.size());
  std::vector<double> candidate(x.size());

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    // gradient
    if (config.analytic_translation_gradients) {
      const PoseSet poses = poses_from_vector(layout, x, full_rotation);
      const auto tgrad = translation_gradient(model, poses);
      for (std::size_t i = 0; i < layout.size(); ++i) {
        const Vec3 g = tgrad.at(layout[i].id);
        grad[i * dof + 0] = g.x();
        grad[i * dof + 1] = g.y();
        grad[i * dof + 2] = g.z();
      }
      probe = x;
      for (std::size_t i = 0; i < layout.size(); ++i) {
        for (std::size_t k = 3; k < dof; ++k) {
          const std::size_t j = i * dof + k;
          probe[j] = x[j] + config.fd_step;
          const double hi = energy_at(probe);
          probe[j] = x[j] - config.fd_step;
          const double lo = energy_at(probe);
          probe[j] = x[j];
          grad[j] = (hi - lo) / (2.0 * config.fd_step);
        }
      }
    } else {
      probe = x;
      for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + config.fd_step;
        const double hi = energy_at(probe);
        probe[j] = x[j] - config.fd_step;
        const double lo = energy_at(probe);
        probe[j] = x[j];
        grad[j] = (hi - lo) / (2.0 * config.fd_step);
      }
    }

    double grad_norm_sq = 0.0;
    for (double g : grad) grad_norm_sq += g * g;
    const double grad_norm = std::sqrt(grad_norm_sq);
    if (grad_norm <= config.grad_tolerance) {
      trace.rows.push_back({iter, energy, 0.0, false});
      break;
    }

    // halving backtracking from the current step
    bool accepted = false;
    double used_step = step;
    for (int back = 0; back < config.max_backtracks; ++back) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        candidate[j] = x[j] - used_step * grad[j];
      }
      const double next = energy_at(candidate);
      if (!std::isfinite(next)) {
        throw Error(ErrorCode::non_finite, "pose energy became non-finite");
      }
      if (next < energy) {
        x = candidate;
        energy = next;
        accepted = true;
        break;
      }
      used_step *= 0.5;
    }
    trace.rows.push_back({iter, energy, accepted ? used_step : 0.0, accepted});
    if (!accepted) break;  // no descent direction at representable step sizes
    step = std::min(used_step * 2.0, config.step_size * 1024.0);
  }

  // Write back: update poses and move each instance's cloud segment by the
  // rigid delta between its entry and final pose.
  const PoseSet final_poses = poses_from_vector(layout, x, full_rotation);
  SpatialContext out = context;
  for (const auto& param : layout) {
    const InstancePose& pose = final_poses.at(param.id);
    const RigidTransform delta = pose.rigid().compose(param.base.rigid().inverse());
    for (auto& p : out.cloud.points) {
      if (p.label == param.id) p.position = delta.apply(p.position);
    }
    out.poses[param.id] = pose;
  }
  return {out, trace};
}

}  // namespace sctx
