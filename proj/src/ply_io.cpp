// SPDX-License-Identifier: Apache-2.0
#include "sctx/ply_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace sctx {

namespace {

static_assert(std::endian::native == std::endian::little,
              "PLY reader/writer assumes a little-endian host");

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

std::optional<Scalar> scalar_from_name(const std::string& name) {
  static const std::map<std::string, Scalar> table = {
      {"char", Scalar::i8},     {"int8", Scalar::i8},
      {"uchar", Scalar::u8},    {"uint8", Scalar::u8},
      {"short", Scalar::i16},   {"int16", Scalar::i16},
      {"ushort", Scalar::u16},  {"uint16", Scalar::u16},
      {"int", Scalar::i32},     {"int32", Scalar::i32},
      {"uint", Scalar::u32},    {"uint32", Scalar::u32},
      {"float", Scalar::f32},   {"float32", Scalar::f32},
      {"double", Scalar::f64},  {"float64", Scalar::f64},
  };
  const auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  std::size_t offset = 0;  // byte offset within one vertex record
};

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::parse_error, path + ": " + what);
}

}  // namespace

LabeledPointCloud load_cloud(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open PLY file " + path);

  std::string line;
  if (!std::getline(in, line) || (line != "ply" && line != "ply\r")) {
    parse_fail(path, "missing 'ply' magic");
  }

  bool format_seen = false;
  std::size_t vertex_count = 0;
  bool in_vertex_element = false;
  bool vertex_element_seen = false;
  std::vector<Property> props;
  std::size_t stride = 0;
  double unit_scale = 1.0;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "comment") {
      std::string key;
      double value;
      if (ss >> key >> value && key == "unit_scale") unit_scale = value;
      continue;
    }
    if (tag == "format") {
      std::string fmt, version;
      ss >> fmt >> version;
      if (fmt != "binary_little_endian") {
        parse_fail(path, "unsupported format '" + fmt + "' (binary_little_endian required)");
      }
      format_seen = true;
    } else if (tag == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
        vertex_element_seen = true;
      } else {
        if (count != 0) {
          parse_fail(path, "non-empty element '" + name + "' is not supported");
        }
        in_vertex_element = false;
      }
    } else if (tag == "property") {
      if (!in_vertex_element) continue;
      std::string type_name, prop_name;
      ss >> type_name >> prop_name;
      if (type_name == "list") {
        parse_fail(path, "list properties are not supported on vertices");
      }
      const auto scalar = scalar_from_name(type_name);
      if (!scalar) parse_fail(path, "unknown property type '" + type_name + "'");
      props.push_back({prop_name, *scalar, stride});
      stride += scalar_size(*scalar);
    } else if (tag == "end_header") {
      break;
    } else if (tag == "ply" || tag.empty()) {
      continue;
    } else {
      parse_fail(path, "unexpected header line '" + line + "'");
    }
  }
  if (!format_seen) parse_fail(path, "missing format line");
  if (!vertex_element_seen) parse_fail(path, "missing vertex element");

  auto find_prop = [&](const char* name, Scalar required) -> const Property& {
    for (const auto& p : props) {
      if (p.name == name) {
        if (p.type != required) {
          parse_fail(path, std::string("property '") + name + "' has the wrong type");
        }
        return p;
      }
    }
    parse_fail(path, std::string("missing vertex property '") + name + "'");
  };
  const Property& px = find_prop("x", Scalar::f32);
  const Property& py = find_prop("y", Scalar::f32);
  const Property& pz = find_prop("z", Scalar::f32);
  const Property& pr = find_prop("red", Scalar::u8);
  const Property& pg = find_prop("green", Scalar::u8);
  const Property& pb = find_prop("blue", Scalar::u8);
  const Property& pi = find_prop("instance", Scalar::u32);

  LabeledPointCloud cloud;
  cloud.unit_scale = unit_scale;
  cloud.points.resize(vertex_count);

  std::vector<char> record(stride);
  auto read_f32 = [&](const Property& p) {
    float v;
    std::memcpy(&v, record.data() + p.offset, 4);
    return v;
  };
  auto read_u8 = [&](const Property& p) {
    return static_cast<unsigned char>(record[p.offset]);
  };
  auto read_u32 = [&](const Property& p) {
    std::uint32_t v;
    std::memcpy(&v, record.data() + p.offset, 4);
    return v;
  };

  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!in.read(record.data(), static_cast<std::streamsize>(stride))) {
      parse_fail(path, "truncated vertex data at record " + std::to_string(i));
    }
    LabeledPoint& pt = cloud.points[i];
    pt.position = Vec3(read_f32(px), read_f32(py), read_f32(pz));
    pt.color = Vec3(read_u8(pr) / 255.0, read_u8(pg) / 255.0, read_u8(pb) / 255.0);
    pt.label = read_u32(pi);
  }
  return cloud;
}

void save_cloud(const LabeledPointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write PLY file " + path);

  std::ostringstream header;
  header.precision(17);
  header << "ply\n"
         << "format binary_little_endian 1.0\n"
         << "comment unit_scale " << cloud.unit_scale << "\n"
         << "element vertex " << cloud.points.size() << "\n"
         << "property float x\n"
         << "property float y\n"
         << "property float z\n"
         << "property uchar red\n"
         << "property uchar green\n"
         << "property uchar blue\n"
         << "property uint instance\n"
         << "end_header\n";
  out << header.str();

  std::vector<char> record(3 * 4 + 3 + 4);
  for (const auto& pt : cloud.points) {
    const float xyz[3] = {static_cast<float>(pt.position.x()),
                          static_cast<float>(pt.position.y()),
                          static_cast<float>(pt.position.z())};
    std::memcpy(record.data(), xyz, 12);
    for (int c = 0; c < 3; ++c) {
      const double v = std::min(1.0, std::max(0.0, pt.color[c]));
      record[12 + c] = static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    std::memcpy(record.data() + 15, &pt.label, 4);
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  if (!out) throw Error(ErrorCode::io_error, "short write on " + path);
}

}  // namespace sctx
