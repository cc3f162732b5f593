// SPDX-License-Identifier: Apache-2.0
#include "sctx/context.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace sctx {

Aabb LabeledPointCloud::aabb() const {
  Aabb box;
  for (const auto& p : points) box.expand(p.position);
  return box;
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------
int relation_arity(Relation r) {
  switch (r) {
    case Relation::clearance: return 1;
    case Relation::contact: return 2;
    case Relation::alignment: return 2;
    case Relation::equidistance: return 3;
    case Relation::symmetry: return 3;
  }
  return 0;
}

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::clearance: return "clearance";
    case Relation::contact: return "contact";
    case Relation::alignment: return "alignment";
    case Relation::equidistance: return "equidistance";
    case Relation::symmetry: return "symmetry";
  }
  return "?";
}

std::optional<Relation> relation_from_name(std::string_view name) {
  if (name == "clearance") return Relation::clearance;
  if (name == "contact") return Relation::contact;
  if (name == "alignment") return Relation::alignment;
  if (name == "equidistance") return Relation::equidistance;
  if (name == "symmetry") return Relation::symmetry;
  return std::nullopt;
}

double default_relation_weight(Relation r) {
  return r == Relation::clearance ? 0.5 : 1.0;
}

std::string AxisMask::to_string() const {
  std::string out;
  if (x) out += 'x';
  if (y) out += 'y';
  if (z) out += 'z';
  return out;
}

std::optional<AxisMask> AxisMask::parse(std::string_view text) {
  AxisMask mask;
  if (text.empty()) return std::nullopt;
  for (char c : text) {
    switch (c) {
      case 'x': mask.x = true; break;
      case 'y': mask.y = true; break;
      case 'z': mask.z = true; break;
      default: return std::nullopt;
    }
  }
  return mask;
}

bool RelationParams::operator==(const RelationParams& o) const {
  auto vec_eq = [](const std::optional<Vec3>& a, const std::optional<Vec3>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || *a == *b;
  };
  return epsilon == o.epsilon && clearance_radius == o.clearance_radius &&
         axes == o.axes && vec_eq(axis, o.axis);
}

bool HyperEdge::operator==(const HyperEdge& o) const {
  return relation == o.relation && members == o.members && weight == o.weight &&
         params == o.params;
}

bool SceneHypergraph::operator==(const SceneHypergraph& o) const {
  return nodes == o.nodes && edges == o.edges;
}

// ---------------------------------------------------------------------------
// Extract / replace / AABB
// ---------------------------------------------------------------------------
namespace {

void require_node(const SpatialContext& context, std::uint32_t label) {
  if (!context.graph.has_node(label)) {
    throw Error(ErrorCode::unknown_instance,
                "no hypergraph node with id " + std::to_string(label));
  }
}

}  // namespace

LabeledPointCloud extract_instance(const SpatialContext& context, std::uint32_t label) {
  require_node(context, label);
  LabeledPointCloud out;
  out.unit_scale = context.cloud.unit_scale;
  for (const auto& p : context.cloud.points) {
    if (p.label == label) out.points.push_back(p);
  }
  if (out.points.empty()) {
    throw Error(ErrorCode::empty_instance,
                "instance " + std::to_string(label) + " has no points");
  }
  return out;
}

SpatialContext replace_instance(const SpatialContext& context, std::uint32_t label,
                                const LabeledPointCloud& replacement) {
  require_node(context, label);
  for (const auto& p : replacement.points) {
    if (p.label != label) {
      throw Error(ErrorCode::label_mismatch,
                  "replacement point labeled " + std::to_string(p.label) +
                      " while replacing instance " + std::to_string(label));
    }
  }
  SpatialContext out = context;
  out.cloud.points.clear();
  out.cloud.points.reserve(context.cloud.points.size() + replacement.points.size());
  for (const auto& p : context.cloud.points) {
    if (p.label != label) out.cloud.points.push_back(p);
  }
  out.cloud.points.insert(out.cloud.points.end(), replacement.points.begin(),
                          replacement.points.end());
  return out;
}

Aabb instance_aabb(const SpatialContext& context, std::uint32_t label) {
  require_node(context, label);
  Aabb box;
  for (const auto& p : context.cloud.points) {
    if (p.label == label) box.expand(p.position);
  }
  if (box.empty()) {
    throw Error(ErrorCode::empty_instance,
                "instance " + std::to_string(label) + " has no points");
  }
  return box;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------
const char* finding_kind_name(FindingKind kind) {
  switch (kind) {
    case FindingKind::dangling_member: return "DanglingMember";
    case FindingKind::arity_mismatch: return "ArityMismatch";
    case FindingKind::orphan_pose_key: return "OrphanPoseKey";
    case FindingKind::non_finite_point: return "NonFinitePoint";
    case FindingKind::color_out_of_range: return "ColorOutOfRange";
    case FindingKind::node_without_points: return "NodeWithoutPoints";
    case FindingKind::reserved_background_id: return "ReservedBackgroundId";
    case FindingKind::bad_weight: return "BadWeight";
    case FindingKind::bad_params: return "BadParams";
    case FindingKind::empty_portrait: return "EmptyPortrait";
    case FindingKind::bad_pose: return "BadPose";
    case FindingKind::bad_mesh: return "BadMesh";
  }
  return "?";
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  for (const auto& f : findings) {
    out << finding_kind_name(f.kind) << ": " << f.message << '\n';
  }
  return out.str();
}

ValidationReport validate(const SpatialContext& context) {
  ValidationReport report;
  auto add = [&](FindingKind kind, std::string message) {
    report.findings.push_back({kind, std::move(message)});
  };

  if (context.portrait.description.empty() && context.portrait.image_refs.empty()) {
    add(FindingKind::empty_portrait, "portrait has neither description nor images");
  }

  std::set<std::uint32_t> labels_present;
  for (std::size_t i = 0; i < context.cloud.points.size(); ++i) {
    const auto& p = context.cloud.points[i];
    if (!p.position.allFinite()) {
      add(FindingKind::non_finite_point, "point " + std::to_string(i) +
                                             " has a non-finite coordinate");
    }
    if ((p.color.array() < 0.0).any() || (p.color.array() > 1.0).any() ||
        !p.color.allFinite()) {
      add(FindingKind::color_out_of_range,
          "point " + std::to_string(i) + " color outside [0,1]");
    }
    labels_present.insert(p.label);
  }

  for (const auto& [id, node] : context.graph.nodes) {
    if (id == 0) {
      add(FindingKind::reserved_background_id, "node id 0 is reserved for background");
    }
    if (node.id != id) {
      add(FindingKind::bad_params, "node map key " + std::to_string(id) +
                                       " disagrees with record id " +
                                       std::to_string(node.id));
    }
    if (!node.planned && labels_present.count(id) == 0) {
      add(FindingKind::node_without_points,
          "node " + std::to_string(id) + " (" + node.name +
              ") has no cloud points and is not marked planned");
    }
  }

  for (std::size_t e = 0; e < context.graph.edges.size(); ++e) {
    const HyperEdge& edge = context.graph.edges[e];
    const std::string where = "edge " + std::to_string(e) + " (" +
                              relation_name(edge.relation) + ")";
    if (static_cast<int>(edge.members.size()) != relation_arity(edge.relation)) {
      add(FindingKind::arity_mismatch,
          where + " has " + std::to_string(edge.members.size()) + " members, needs " +
              std::to_string(relation_arity(edge.relation)));
    }
    for (std::uint32_t m : edge.members) {
      if (!context.graph.has_node(m)) {
        add(FindingKind::dangling_member,
            where + " references missing node " + std::to_string(m));
      }
    }
    if (!(edge.weight >= 0.0) || !std::isfinite(edge.weight)) {
      add(FindingKind::bad_weight, where + " has negative or non-finite weight");
    }
    if (edge.params.epsilon && !(*edge.params.epsilon > 0.0)) {
      add(FindingKind::bad_params, where + " has non-positive eps");
    }
    if (edge.params.clearance_radius && !(*edge.params.clearance_radius > 0.0)) {
      add(FindingKind::bad_params, where + " has non-positive dmin");
    }
    if (edge.params.axes && edge.params.axes->count() == 0) {
      add(FindingKind::bad_params, where + " has an empty axis selector");
    }
    if (edge.relation == Relation::symmetry && edge.params.axes &&
        edge.params.axes->count() != 1) {
      add(FindingKind::bad_params, where + " needs exactly one symmetry axis");
    }
    if (edge.params.axis &&
        std::abs(edge.params.axis->norm() - 1.0) > 1e-9) {
      add(FindingKind::bad_params, where + " axis is not unit length");
    }
    if ((edge.relation == Relation::symmetry || edge.relation == Relation::equidistance) &&
        edge.members.size() == 3) {
      if (edge.members[0] == edge.members[1] || edge.members[0] == edge.members[2] ||
          edge.members[1] == edge.members[2]) {
        add(FindingKind::bad_params, where + " has duplicate members");
      }
    }
  }

  for (const auto& [id, pose] : context.poses) {
    if (!context.graph.has_node(id)) {
      add(FindingKind::orphan_pose_key,
          "pose stored for missing node " + std::to_string(id));
    }
    if (std::abs(pose.rotation.norm() - 1.0) > 1e-9) {
      add(FindingKind::bad_pose,
          "pose for node " + std::to_string(id) + " has a non-unit quaternion");
    }
    if (!(pose.scale > 0.0) || !std::isfinite(pose.scale) ||
        !pose.translation.allFinite()) {
      add(FindingKind::bad_pose,
          "pose for node " + std::to_string(id) + " has a bad scale or translation");
    }
  }

  for (const auto& [id, mesh] : context.meshes) {
    if (!context.graph.has_node(id)) {
      add(FindingKind::bad_mesh, "mesh stored for missing node " + std::to_string(id));
    }
    if (mesh.vertices.empty()) {
      add(FindingKind::bad_mesh, "mesh for node " + std::to_string(id) + " has no vertices");
    }
    for (const auto& t : mesh.triangles) {
      if (t[0] >= mesh.vertices.size() || t[1] >= mesh.vertices.size() ||
          t[2] >= mesh.vertices.size()) {
        add(FindingKind::bad_mesh,
            "mesh for node " + std::to_string(id) + " has an out-of-range triangle index");
        break;
      }
    }
  }

  return report;
}

// ---------------------------------------------------------------------------
// Label merging
// ---------------------------------------------------------------------------
namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Aabb labeling_instance_aabb(const Labeling& labeling, std::uint32_t id) {
  Aabb box;
  for (const auto& p : labeling.cloud.points) {
    if (p.label == id) box.expand(p.position);
  }
  return box;
}

}  // namespace

Labeling merge_labelings(const Labeling& a, const Labeling& b) {
  Labeling out = a;
  std::uint32_t next_id = 0;
  for (const auto& [id, node] : a.graph.nodes) next_id = std::max(next_id, id);

  std::map<std::uint32_t, std::uint32_t> relabel;
  for (const auto& [id_b, node_b] : b.graph.nodes) {
    const Aabb box_b = labeling_instance_aabb(b, id_b);
    double best_iou = 0.5;  // merge threshold
    std::optional<std::uint32_t> best;
    for (const auto& [id_a, node_a] : a.graph.nodes) {
      if (lowercase(node_a.name) != lowercase(node_b.name)) continue;
      const double iou = labeling_instance_aabb(a, id_a).iou(box_b);
      if (iou > best_iou) {
        best_iou = iou;
        best = id_a;
      }
    }
    if (best) {
      relabel[id_b] = *best;
    } else {
      relabel[id_b] = ++next_id;
      SceneNode fresh = node_b;
      fresh.id = next_id;
      out.graph.nodes[next_id] = fresh;
    }
  }

  for (const auto& edge : b.graph.edges) {
    HyperEdge mapped = edge;
    for (auto& m : mapped.members) {
      const auto it = relabel.find(m);
      if (it != relabel.end()) m = it->second;
    }
    // ignore duplicates of already-present edges
    if (std::find(out.graph.edges.begin(), out.graph.edges.end(), mapped) ==
        out.graph.edges.end()) {
      out.graph.edges.push_back(mapped);
    }
  }

  out.cloud.points.reserve(out.cloud.points.size() + b.cloud.points.size());
  for (LabeledPoint p : b.cloud.points) {
    const auto it = relabel.find(p.label);
    if (it != relabel.end()) p.label = it->second;
    out.cloud.points.push_back(p);
  }
  return out;
}

}  // namespace sctx
