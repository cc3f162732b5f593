// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "sctx/context.hpp"

namespace sctx {

/// On-disk context bundle: a directory holding
///   cloud.ply       binary little-endian labeled point cloud
///   graph.txt       canonical hypergraph grammar
///   portrait.txt    description text; lines starting "image: " add refs
///   layout.json     optional per-instance poses {id, scale, rotation, translation}
///   meshes/<id>.obj optional instance meshes
///   manifest.json   {format_version, unit_scale, created_by}
inline constexpr int kBundleFormatVersion = 1;

SpatialContext load_bundle(const std::string& dir);
void save_bundle(const SpatialContext& context, const std::string& dir);

/// Poses as the layout JSON array (also used by the export-layout command).
std::string layout_to_json(const PoseSet& poses);
PoseSet layout_from_json(const std::string& json_text);

ScenePortrait load_portrait(const std::string& path);
void save_portrait(const ScenePortrait& portrait, const std::string& path);

}  // namespace sctx
