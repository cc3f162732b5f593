// SPDX-License-Identifier: Apache-2.0
#include "sctx/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <httplib.h>

#include "sctx/ply_io.hpp"
#include "sctx/strings.hpp"

namespace sctx {

namespace {

// -------------------------------------------------------------------------
// Line cursor with 1-based line/column reporting
// -------------------------------------------------------------------------
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line_no)
      : text_(text), line_no_(line_no) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string_view word() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_' || text_[pos_] == '-')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  double number() {
    skip_ws();
    double value = 0.0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{}) fail("expected a number");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    return value;
  }

  std::uint64_t unsigned_int() {
    skip_ws();
    std::uint64_t value = 0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{}) fail("expected a non-negative integer");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    return value;
  }

  Vec3 vec3() {
    expect('(');
    Vec3 v;
    v.x() = number();
    expect(',');
    v.y() = number();
    expect(',');
    v.z() = number();
    expect(')');
    return v;
  }

  std::string quoted_string() {
    skip_ws();
    if (!consume('"')) fail("expected '\"'");
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("dangling escape");
        const char esc = text_[pos_++];
        if (esc != '"' && esc != '\\') fail("unknown escape sequence");
        out.push_back(esc);
      } else {
        out.push_back(c);
      }
    }
    fail("unterminated string");
    return out;
  }

  /// Rest of the line, trimmed.
  std::string_view rest() {
    skip_ws();
    return trim(text_.substr(pos_));
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no_) + ", col " +
                                            std::to_string(pos_ + 1) + ": " + what);
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view text_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

HyperEdge parse_edge_line(Cursor& cur, std::string_view relation_word) {
  const auto relation = relation_from_name(relation_word);
  if (!relation) {
    throw Error(ErrorCode::unknown_relation,
                "line " + std::to_string(cur.line_no()) + ": unknown relation '" +
                    std::string(relation_word) + "'");
  }
  HyperEdge edge;
  edge.relation = *relation;
  edge.weight = default_relation_weight(*relation);

  cur.expect('(');
  for (;;) {
    edge.members.push_back(static_cast<std::uint32_t>(cur.unsigned_int()));
    cur.skip_ws();
    if (cur.consume(',')) continue;
    cur.expect(')');
    break;
  }
  if (static_cast<int>(edge.members.size()) != relation_arity(*relation)) {
    throw Error(ErrorCode::arity_mismatch,
                "line " + std::to_string(cur.line_no()) + ": " +
                    relation_name(*relation) + " takes " +
                    std::to_string(relation_arity(*relation)) + " members, got " +
                    std::to_string(edge.members.size()));
  }

  while (!cur.at_end()) {
    const std::string_view key = cur.word();
    cur.expect('=');
    if (key == "w") {
      edge.weight = cur.number();
    } else if (key == "eps") {
      edge.params.epsilon = cur.number();
    } else if (key == "dmin") {
      edge.params.clearance_radius = cur.number();
    } else if (key == "axes") {
      const std::string_view subset = cur.word();
      const auto mask = AxisMask::parse(subset);
      if (!mask) cur.fail("axes must be a non-empty subset of {x,y,z}");
      edge.params.axes = *mask;
    } else if (key == "axis") {
      edge.params.axis = cur.vec3();
    } else {
      cur.fail("unknown edge parameter '" + std::string(key) + "'");
    }
  }
  return edge;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hypergraph serialization
// ---------------------------------------------------------------------------
std::string serialize_edge(const HyperEdge& edge) {
  std::string out = relation_name(edge.relation);
  out += '(';
  for (std::size_t i = 0; i < edge.members.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(edge.members[i]);
  }
  out += ") w=";
  out += format_double(edge.weight);
  if (edge.params.epsilon) out += " eps=" + format_double(*edge.params.epsilon);
  if (edge.params.clearance_radius) {
    out += " dmin=" + format_double(*edge.params.clearance_radius);
  }
  if (edge.params.axes) out += " axes=" + edge.params.axes->to_string();
  if (edge.params.axis) {
    out += " axis=(" + format_double(edge.params.axis->x()) + ',' +
           format_double(edge.params.axis->y()) + ',' +
           format_double(edge.params.axis->z()) + ')';
  }
  return out;
}

std::string serialize_hypergraph(const SceneHypergraph& graph) {
  std::string out;
  for (const auto& [id, node] : graph.nodes) {
    out += "node " + std::to_string(id) + ' ' + quote(node.name);
    if (node.planned) out += " planned";
    out += '\n';
  }
  for (const HyperEdge& edge : graph.edges) {
    out += serialize_edge(edge);
    out += '\n';
  }
  return out;
}

SceneHypergraph parse_hypergraph(const std::string& text) {
  SceneHypergraph graph;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (trim(raw).empty()) continue;

    Cursor cur(raw, line_no);
    const std::string_view head = cur.word();
    if (head == "node") {
      SceneNode node;
      node.id = static_cast<std::uint32_t>(cur.unsigned_int());
      node.name = cur.quoted_string();
      if (!cur.at_end()) {
        const std::string_view flag = cur.word();
        if (flag != "planned") cur.fail("expected 'planned'");
        node.planned = true;
        if (!cur.at_end()) cur.fail("trailing text after node declaration");
      }
      if (graph.nodes.count(node.id)) {
        cur.fail("duplicate node id " + std::to_string(node.id));
      }
      graph.nodes[node.id] = node;
    } else {
      graph.edges.push_back(parse_edge_line(cur, head));
      if (!cur.at_end()) cur.fail("trailing text after edge");
    }
  }
  // edges may reference nodes that were never declared; materialize them
  for (const HyperEdge& edge : graph.edges) {
    for (std::uint32_t m : edge.members) {
      if (!graph.has_node(m)) graph.nodes[m] = SceneNode{m, "", false};
    }
  }
  return graph;
}

// ---------------------------------------------------------------------------
// Edit commands
// ---------------------------------------------------------------------------
std::vector<EditCommand> parse_edit_commands(const std::string& text) {
  std::vector<EditCommand> commands;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (trim(raw).empty()) continue;

    Cursor cur(raw, line_no);
    const std::string_view verb = cur.word();
    EditCommand cmd;
    if (verb == "move") {
      cmd.kind = EditCommand::Kind::transform_instance;
      cmd.id = static_cast<std::uint32_t>(cur.unsigned_int());
      bool have_t = false;
      while (!cur.at_end()) {
        const std::string_view key = cur.word();
        cur.expect('=');
        if (key == "s") {
          cmd.transform.scale = cur.number();
        } else if (key == "r") {
          const std::string_view fn = cur.word();
          if (fn != "quat") cur.fail("rotation must be quat(w,x,y,z)");
          cur.expect('(');
          const double w = cur.number();
          cur.expect(',');
          const double x = cur.number();
          cur.expect(',');
          const double y = cur.number();
          cur.expect(',');
          const double z = cur.number();
          cur.expect(')');
          Eigen::Quaterniond q(w, x, y, z);
          if (std::abs(q.norm() - 1.0) > 1e-3) {
            throw Error(ErrorCode::invalid_transform,
                        "line " + std::to_string(line_no) +
                            ": rotation quaternion is not unit length");
          }
          q.normalize();
          cmd.transform.rotation = q.toRotationMatrix();
        } else if (key == "t") {
          cmd.transform.translation = cur.vec3();
          have_t = true;
        } else {
          cur.fail("unknown move parameter '" + std::string(key) + "'");
        }
      }
      if (!have_t) cur.fail("move requires t=(x,y,z)");
      if (!(cmd.transform.scale > 0.0) || !std::isfinite(cmd.transform.scale)) {
        throw Error(ErrorCode::invalid_transform,
                    "line " + std::to_string(line_no) + ": scale must be positive");
      }
    } else if (verb == "replace") {
      cmd.kind = EditCommand::Kind::replace_instance;
      cmd.id = static_cast<std::uint32_t>(cur.unsigned_int());
      const std::string_view key = cur.word();
      if (key != "file") cur.fail("replace requires file=<path>");
      cur.expect('=');
      cmd.file_ref = std::string(cur.rest());
      if (cmd.file_ref.empty()) cur.fail("empty file path");
    } else if (verb == "addedge") {
      cmd.kind = EditCommand::Kind::add_edge;
      const std::string_view relation_word = cur.word();
      cmd.edge = parse_edge_line(cur, relation_word);
      if (!cur.at_end()) cur.fail("trailing text after edge");
    } else if (verb == "dropedge") {
      cmd.kind = EditCommand::Kind::remove_edge;
      cmd.ordinal = static_cast<std::size_t>(cur.unsigned_int());
      if (!cur.at_end()) cur.fail("trailing text after ordinal");
    } else {
      cur.fail("unknown command '" + std::string(verb) + "'");
    }
    commands.push_back(std::move(cmd));
  }
  return commands;
}

namespace {

void transform_instance_in_place(SpatialContext& ctx, std::uint32_t id,
                                 const SimilarityTransform& t) {
  if (!ctx.graph.has_node(id)) {
    throw Error(ErrorCode::unknown_instance, "move targets missing node " + std::to_string(id));
  }
  for (auto& p : ctx.cloud.points) {
    if (p.label == id) p.position = t.apply(p.position);
  }
  const auto pose_it = ctx.poses.find(id);
  if (pose_it != ctx.poses.end()) {
    const SimilarityTransform updated = compose(t, pose_it->second.similarity());
    pose_it->second.scale = updated.scale;
    pose_it->second.rotation = Eigen::Quaterniond(updated.rotation).normalized();
    pose_it->second.translation = updated.translation;
  }
}

}  // namespace

SpatialContext apply_edits(const SpatialContext& context,
                           std::span<const EditCommand> commands) {
  SpatialContext ctx = context;
  for (const EditCommand& cmd : commands) {
    switch (cmd.kind) {
      case EditCommand::Kind::transform_instance:
        transform_instance_in_place(ctx, cmd.id, cmd.transform);
        break;
      case EditCommand::Kind::replace_instance: {
        const LabeledPointCloud replacement = load_cloud(cmd.file_ref);
        ctx = replace_instance(ctx, cmd.id, replacement);
        break;
      }
      case EditCommand::Kind::add_edge: {
        for (std::uint32_t m : cmd.edge.members) {
          if (!ctx.graph.has_node(m)) {
            throw Error(ErrorCode::unknown_instance,
                        "addedge references missing node " + std::to_string(m));
          }
        }
        ctx.graph.edges.push_back(cmd.edge);
        break;
      }
      case EditCommand::Kind::remove_edge: {
        if (cmd.ordinal >= ctx.graph.edges.size()) {
          throw Error(ErrorCode::validation_failed,
                      "dropedge ordinal " + std::to_string(cmd.ordinal) +
                          " out of range (have " +
                          std::to_string(ctx.graph.edges.size()) + " edges)");
        }
        ctx.graph.edges.erase(ctx.graph.edges.begin() +
                              static_cast<std::ptrdiff_t>(cmd.ordinal));
        break;
      }
    }
  }
  const ValidationReport report = validate(ctx);
  if (!report.ok()) {
    throw Error(ErrorCode::validation_failed,
                "edited context does not validate:\n" + report.to_text());
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Readout
// ---------------------------------------------------------------------------
namespace {

std::string format_vec3(const Vec3& v) {
  return "(" + format_double(v.x()) + ',' + format_double(v.y()) + ',' +
         format_double(v.z()) + ')';
}

}  // namespace

std::string ReadoutDocument::to_text() const {
  std::string out = "# spatial context readout v1\n\n## portrait\n";
  out += portrait_text;
  if (!portrait_text.empty() && portrait_text.back() != '\n') out += '\n';
  out += "\n## instances\n";
  for (const auto& row : instance_table) {
    out += "id=" + std::to_string(row.id) + " name=" + quote(row.name) +
           " points=" + std::to_string(row.point_count);
    if (row.aabb) {
      out += " aabb_min=" + format_vec3(row.aabb->min) +
             " aabb_max=" + format_vec3(row.aabb->max);
    } else {
      out += " planned";
    }
    out += '\n';
  }
  out += "\n## hypergraph\n";
  out += hypergraph_text;
  out += "\n## views\n";
  for (const auto& ref : view_refs) out += ref + '\n';
  return out;
}

ReadoutDocument serialize_readout(const SpatialContext& context,
                                  const std::string& view_dir, int resolution) {
  const ValidationReport report = validate(context);
  if (!report.ok()) {
    throw Error(ErrorCode::validation_failed,
                "context does not validate:\n" + report.to_text());
  }

  ReadoutDocument doc;
  doc.portrait_text = context.portrait.description;
  for (const auto& ref : context.portrait.image_refs) {
    doc.portrait_text += "\nimage: " + ref;
  }

  for (const auto& [id, node] : context.graph.nodes) {
    ReadoutDocument::InstanceRow row;
    row.id = id;
    row.name = node.name;
    Aabb box;
    for (const auto& p : context.cloud.points) {
      if (p.label == id) {
        box.expand(p.position);
        ++row.point_count;
      }
    }
    if (!box.empty()) row.aabb = box;
    doc.instance_table.push_back(std::move(row));
  }

  doc.hypergraph_text = serialize_hypergraph(context.graph);

  if (!context.cloud.empty()) {
    std::filesystem::create_directories(view_dir);
    for (const Camera& cam : canonical_cameras(context.cloud, resolution)) {
      const std::string base = "view_" + cam.name;
      const PointMap map = render_pointmap(context.cloud, cam, 1);
      export_pointmap(map, (std::filesystem::path(view_dir) / base).string());
      doc.view_refs.push_back(base + ".rgb.png");
      doc.view_refs.push_back(base + ".instance.png");
      doc.view_refs.push_back(base + ".depth.raw");
      doc.view_refs.push_back(base + ".depth.dim");
    }
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Endpoint
// ---------------------------------------------------------------------------
AgentEndpoint AgentEndpoint::scripted(std::vector<std::string> responses) {
  AgentEndpoint ep;
  ep.kind_ = Kind::scripted;
  ep.responses_ = std::move(responses);
  return ep;
}

AgentEndpoint AgentEndpoint::external(std::string base_url, std::string auth_token,
                                      std::chrono::milliseconds timeout) {
  AgentEndpoint ep;
  ep.kind_ = Kind::external;
  ep.base_url_ = std::move(base_url);
  ep.auth_token_ = std::move(auth_token);
  ep.timeout_ = timeout;
  return ep;
}

bool AgentEndpoint::has_next() const {
  return kind_ == Kind::external || cursor_ < responses_.size();
}

std::string AgentEndpoint::next_response(const std::string& readout_text) {
  if (kind_ == Kind::scripted) {
    if (cursor_ >= responses_.size()) {
      throw Error(ErrorCode::script_exhausted, "stub script has no more responses");
    }
    return responses_[cursor_++];
  }

  // scheme://host[:port][/path...]
  const auto scheme_end = base_url_.find("://");
  if (scheme_end == std::string::npos || base_url_.substr(0, scheme_end) != "http") {
    throw Error(ErrorCode::invalid_argument,
                "external endpoint URL must be http:// (got " + base_url_ + ")");
  }
  const auto path_start = base_url_.find('/', scheme_end + 3);
  const std::string host = path_start == std::string::npos
                               ? base_url_
                               : base_url_.substr(0, path_start);
  const std::string path = path_start == std::string::npos
                               ? std::string("/")
                               : base_url_.substr(path_start);

  httplib::Client client(host);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_));
  httplib::Headers headers;
  if (!auth_token_.empty()) {
    headers.emplace("Authorization", "Bearer " + auth_token_);
  }
  const auto res = client.Post(path, headers, readout_text, "text/plain");
  if (!res) {
    throw Error(ErrorCode::io_error, "agent endpoint request failed: " +
                                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::io_error,
                "agent endpoint returned status " + std::to_string(res->status));
  }
  return res->body;
}

// ---------------------------------------------------------------------------
// Stub session
// ---------------------------------------------------------------------------
std::size_t Transcript::count(Entry::Role role) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [&](const Entry& e) { return e.role == role; }));
}

std::string Transcript::to_text() const {
  std::string out;
  std::size_t readouts = 0;
  std::size_t responses = 0;
  for (const Entry& e : entries) {
    if (e.role == Entry::Role::readout) {
      out += "=== readout " + std::to_string(++readouts) + " ===\n";
    } else {
      out += "=== response " + std::to_string(++responses) + " ===\n";
    }
    out += e.text;
    if (out.empty() || out.back() != '\n') out += '\n';
  }
  return out;
}

std::pair<SpatialContext, Transcript> run_stub_session(AgentEndpoint& endpoint,
                                                       const SpatialContext& context,
                                                       const std::string& view_dir,
                                                       int resolution) {
  if (!endpoint.is_stub()) {
    throw Error(ErrorCode::invalid_argument,
                "run_stub_session requires a scripted endpoint");
  }
  SpatialContext ctx = context;
  Transcript transcript;
  for (;;) {
    const ReadoutDocument doc = serialize_readout(ctx, view_dir, resolution);
    transcript.entries.push_back({Transcript::Entry::Role::readout, doc.to_text()});
    if (!endpoint.has_next()) break;
    const std::string response = endpoint.next_response(doc.to_text());
    transcript.entries.push_back({Transcript::Entry::Role::agent, response});
    try {
      const std::vector<EditCommand> commands = parse_edit_commands(response);
      ctx = apply_edits(ctx, commands);
    } catch (const Error& err) {
      throw Error(err.code(), std::string(err.what()) + "\n--- transcript ---\n" +
                                  transcript.to_text());
    }
  }
  return {ctx, transcript};
}

}  // namespace sctx
