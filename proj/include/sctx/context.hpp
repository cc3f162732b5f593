// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "sctx/geometry.hpp"

namespace sctx {

// ---------------------------------------------------------------------------
// Labeled point cloud
// ---------------------------------------------------------------------------

/// One cloud sample: position, RGB color in [0,1], instance label.
/// Label 0 is reserved for background/unlabeled points and never appears
/// as a hypergraph node.
struct LabeledPoint {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  std::uint32_t label = 0;
};

struct LabeledPointCloud {
  std::vector<LabeledPoint> points;
  double unit_scale = 1.0;  // meters per scene unit

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Aabb aabb() const;
};

struct ScenePortrait {
  std::string description;
  std::vector<std::string> image_refs;
};

// ---------------------------------------------------------------------------
// Scene hypergraph
// ---------------------------------------------------------------------------

enum class Relation { clearance, contact, alignment, equidistance, symmetry };

int relation_arity(Relation r);
const char* relation_name(Relation r);
std::optional<Relation> relation_from_name(std::string_view name);
double default_relation_weight(Relation r);

/// Axis subset selector for alignment/symmetry relations.
struct AxisMask {
  bool x = false;
  bool y = false;
  bool z = false;

  int count() const { return (x ? 1 : 0) + (y ? 1 : 0) + (z ? 1 : 0); }
  bool operator==(const AxisMask&) const = default;
  std::string to_string() const;
  static std::optional<AxisMask> parse(std::string_view text);
};

struct RelationParams {
  std::optional<double> epsilon;           // contact soft margin
  std::optional<double> clearance_radius;  // d_min
  std::optional<AxisMask> axes;            // alignment / symmetry selector
  std::optional<Vec3> axis;                // equidistance unit axis

  bool operator==(const RelationParams& o) const;
};

struct HyperEdge {
  Relation relation = Relation::contact;
  std::vector<std::uint32_t> members;  // ordered; for ternary relations the
                                       // last member is the reference v_k
  double weight = 1.0;
  RelationParams params;

  bool operator==(const HyperEdge& o) const;
};

struct SceneNode {
  std::uint32_t id = 0;
  std::string name;
  bool planned = false;  // declared but not yet backed by cloud points

  bool operator==(const SceneNode&) const = default;
};

struct SceneHypergraph {
  std::map<std::uint32_t, SceneNode> nodes;
  std::vector<HyperEdge> edges;

  bool has_node(std::uint32_t id) const { return nodes.count(id) != 0; }
  bool operator==(const SceneHypergraph& o) const;
};

// ---------------------------------------------------------------------------
// Poses
// ---------------------------------------------------------------------------

/// World pose of one instance. The rigid part {rotation, translation} is
/// what ergonomic adjustment optimizes; scale comes from layout planning
/// and stays fixed afterwards.
struct InstancePose {
  double scale = 1.0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  RigidTransform rigid() const { return {rotation.toRotationMatrix(), translation}; }
  SimilarityTransform similarity() const {
    return {scale, rotation.toRotationMatrix(), translation};
  }
};

using PoseSet = std::map<std::uint32_t, InstancePose>;

// ---------------------------------------------------------------------------
// Spatial context
// ---------------------------------------------------------------------------

/// The context triple (portrait, cloud, hypergraph) plus per-instance poses
/// and optional meshes. Values are immutable by convention: every update
/// operation returns a new context.
struct SpatialContext {
  ScenePortrait portrait;
  LabeledPointCloud cloud;
  SceneHypergraph graph;
  PoseSet poses;
  std::map<std::uint32_t, MeshInstance> meshes;
};

/// Masked extraction P_v = { (x,c) | l = v }, order-preserving.
LabeledPointCloud extract_instance(const SpatialContext& context, std::uint32_t label);

/// Masked update P <- (P \ P_v) ∪ P̂_v. Points of other labels are untouched
/// and keep their relative order; the replacement is appended.
SpatialContext replace_instance(const SpatialContext& context, std::uint32_t label,
                                const LabeledPointCloud& replacement);

Aabb instance_aabb(const SpatialContext& context, std::uint32_t label);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class FindingKind {
  dangling_member,
  arity_mismatch,
  orphan_pose_key,
  non_finite_point,
  color_out_of_range,
  node_without_points,
  reserved_background_id,
  bad_weight,
  bad_params,
  empty_portrait,
  bad_pose,
  bad_mesh,
};

const char* finding_kind_name(FindingKind kind);

struct Finding {
  FindingKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;
  bool ok() const { return findings.empty(); }
  std::string to_text() const;
};

/// Total: never throws; empty report iff the context is well-formed.
ValidationReport validate(const SpatialContext& context);

// ---------------------------------------------------------------------------
// Multi-view label merging
// ---------------------------------------------------------------------------

struct Labeling {
  LabeledPointCloud cloud;
  SceneHypergraph graph;
};

/// Merge a second view's labeling into a base one. An instance of `b` is
/// identified with an instance of `a` when their AABB IoU exceeds 0.5 and
/// the category names match case-insensitively (best IoU wins); all other
/// instances receive fresh ids. Clouds are concatenated, `b` relabeled.
Labeling merge_labelings(const Labeling& a, const Labeling& b);

}  // namespace sctx
