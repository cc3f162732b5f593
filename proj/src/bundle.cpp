// SPDX-License-Identifier: Apache-2.0
#include "sctx/bundle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sctx/ply_io.hpp"
#include "sctx/protocol.hpp"
#include "sctx/strings.hpp"

namespace sctx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "short write on " + path);
}

}  // namespace

ScenePortrait load_portrait(const std::string& path) {
  ScenePortrait portrait;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::string description;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("image: ", 0) == 0) {
      portrait.image_refs.push_back(line.substr(7));
    } else {
      if (!description.empty()) description += '\n';
      description += line;
    }
  }
  while (!description.empty() && description.back() == '\n') description.pop_back();
  portrait.description = description;
  return portrait;
}

void save_portrait(const ScenePortrait& portrait, const std::string& path) {
  std::string text = portrait.description;
  if (!text.empty() && text.back() != '\n') text += '\n';
  for (const auto& ref : portrait.image_refs) text += "image: " + ref + '\n';
  write_text_file(path, text);
}

std::string layout_to_json(const PoseSet& poses) {
  json arr = json::array();
  for (const auto& [id, pose] : poses) {
    json entry;
    entry["id"] = id;
    entry["scale"] = pose.scale;
    entry["rotation"] = {pose.rotation.w(), pose.rotation.x(), pose.rotation.y(),
                         pose.rotation.z()};
    entry["translation"] = {pose.translation.x(), pose.translation.y(),
                            pose.translation.z()};
    arr.push_back(entry);
  }
  return arr.dump(2) + "\n";
}

PoseSet layout_from_json(const std::string& json_text) {
  json arr;
  try {
    arr = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("layout JSON: ") + e.what());
  }
  if (!arr.is_array()) throw Error(ErrorCode::parse_error, "layout JSON must be an array");

  PoseSet poses;
  for (const auto& entry : arr) {
    try {
      InstancePose pose;
      const auto id = entry.at("id").get<std::uint32_t>();
      pose.scale = entry.at("scale").get<double>();
      const auto& q = entry.at("rotation");
      pose.rotation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                         q.at(2).get<double>(), q.at(3).get<double>());
      const auto& t = entry.at("translation");
      pose.translation =
          Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
      if (std::abs(pose.rotation.norm() - 1.0) > 1e-6) {
        throw Error(ErrorCode::parse_error, "layout rotation is not a unit quaternion");
      }
      pose.rotation.normalize();
      poses[id] = pose;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, std::string("layout JSON entry: ") + e.what());
    }
  }
  return poses;
}

SpatialContext load_bundle(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::io_error, dir + " is not a bundle directory");
  }

  json manifest;
  try {
    manifest = json::parse(read_text_file((root / "manifest.json").string()));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("manifest.json: ") + e.what());
  }
  const int version = manifest.value("format_version", -1);
  if (version != kBundleFormatVersion) {
    throw Error(ErrorCode::version_mismatch,
                "bundle format_version " + std::to_string(version) + " is not supported");
  }

  SpatialContext ctx;
  ctx.cloud = load_cloud((root / "cloud.ply").string());
  ctx.cloud.unit_scale = manifest.value("unit_scale", ctx.cloud.unit_scale);
  ctx.graph = parse_hypergraph(read_text_file((root / "graph.txt").string()));
  ctx.portrait = load_portrait((root / "portrait.txt").string());

  if (fs::exists(root / "layout.json")) {
    ctx.poses = layout_from_json(read_text_file((root / "layout.json").string()));
  }
  if (fs::is_directory(root / "meshes")) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root / "meshes")) {
      if (entry.path().extension() == ".obj") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::uint32_t id = 0;
      try {
        id = static_cast<std::uint32_t>(std::stoul(file.stem().string()));
      } catch (const std::exception&) {
        throw Error(ErrorCode::parse_error,
                    "mesh file name must be <instance-id>.obj: " + file.string());
      }
      MeshInstance mesh = load_obj(file.string());
      mesh.label = id;
      ctx.meshes[id] = std::move(mesh);
    }
  }
  return ctx;
}

void save_bundle(const SpatialContext& context, const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir + ": " + ec.message());

  save_cloud(context.cloud, (root / "cloud.ply").string());
  write_text_file((root / "graph.txt").string(), serialize_hypergraph(context.graph));
  save_portrait(context.portrait, (root / "portrait.txt").string());
  if (!context.poses.empty()) {
    write_text_file((root / "layout.json").string(), layout_to_json(context.poses));
  }
  if (!context.meshes.empty()) {
    fs::create_directories(root / "meshes", ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create mesh directory: " + ec.message());
    for (const auto& [id, mesh] : context.meshes) {
      save_obj(mesh, (root / "meshes" / (std::to_string(id) + ".obj")).string());
    }
  }

  json manifest;
  manifest["format_version"] = kBundleFormatVersion;
  manifest["unit_scale"] = context.cloud.unit_scale;
  manifest["created_by"] = "sctx";
  write_text_file((root / "manifest.json").string(), manifest.dump(2) + "\n");
}

}  // namespace sctx
