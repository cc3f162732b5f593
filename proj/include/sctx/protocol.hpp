// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sctx/context.hpp"
#include "sctx/projection.hpp"

namespace sctx {

// ---------------------------------------------------------------------------
// Canonical hypergraph text
// ---------------------------------------------------------------------------
// One declaration per line:
//   node <id> "<name>" [planned]
//   <relation>(<id>[,<id>[,<id>]]) [w=<float>] [eps=<float>] [dmin=<float>]
//                                  [axes=<xyz subset>] [axis=(<x>,<y>,<z>)]
// '#' starts a comment; blank lines are ignored. Nodes referenced by an
// edge but never declared are created with an empty name.

std::string serialize_hypergraph(const SceneHypergraph& graph);
SceneHypergraph parse_hypergraph(const std::string& text);

/// Single edge line in canonical form (as emitted by serialize_hypergraph).
std::string serialize_edge(const HyperEdge& edge);

// ---------------------------------------------------------------------------
// Edit commands
// ---------------------------------------------------------------------------
// One command per line:
//   move <id> [s=<float>] [r=quat(<w>,<x>,<y>,<z>)] t=(<x>,<y>,<z>)
//   replace <id> file=<path>
//   addedge <edge-line>
//   dropedge <ordinal>

struct EditCommand {
  enum class Kind { transform_instance, replace_instance, add_edge, remove_edge };

  Kind kind = Kind::transform_instance;
  std::uint32_t id = 0;                 // transform / replace target
  SimilarityTransform transform;        // transform_instance
  std::string file_ref;                 // replace_instance
  HyperEdge edge;                       // add_edge
  std::size_t ordinal = 0;              // remove_edge, 0-based
};

std::vector<EditCommand> parse_edit_commands(const std::string& text);

/// Applies commands in order to a copy of the context and returns it; the
/// post-state must validate cleanly or the whole batch is rejected. The
/// input context is never touched, so a throw leaves the caller's value
/// bitwise unchanged.
SpatialContext apply_edits(const SpatialContext& context,
                           std::span<const EditCommand> commands);

// ---------------------------------------------------------------------------
// Readout
// ---------------------------------------------------------------------------

struct ReadoutDocument {
  struct InstanceRow {
    std::uint32_t id = 0;
    std::string name;
    std::size_t point_count = 0;
    std::optional<Aabb> aabb;  // absent for planned instances without points
  };

  std::string portrait_text;
  std::vector<InstanceRow> instance_table;  // sorted by id
  std::string hypergraph_text;              // canonical edge grammar
  std::vector<std::string> view_refs;       // file names inside the view dir

  std::string to_text() const;
};

/// Renders + exports the canonical point maps into view_dir and builds the
/// textual readout. The context must validate cleanly (ValidationFailed
/// otherwise). View refs are stored as bare file names so the document text
/// is independent of where the views live.
ReadoutDocument serialize_readout(const SpatialContext& context,
                                  const std::string& view_dir, int resolution = 512);

// ---------------------------------------------------------------------------
// Agent endpoint and sessions
// ---------------------------------------------------------------------------

/// Either a scripted stub (canned responses, consumed in order) or an
/// external HTTP service. The stub keeps the whole pipeline runnable and
/// testable offline; nothing in the core test suite touches the network.
class AgentEndpoint {
 public:
  static AgentEndpoint scripted(std::vector<std::string> responses);
  static AgentEndpoint external(std::string base_url, std::string auth_token,
                                std::chrono::milliseconds timeout);

  bool is_stub() const { return kind_ == Kind::scripted; }
  bool has_next() const;

  /// Next agent response for the given readout. The stub ignores the
  /// readout text and throws ScriptExhausted when the script is consumed;
  /// the external transport POSTs the readout and returns the reply body.
  std::string next_response(const std::string& readout_text);

 private:
  enum class Kind { scripted, external };

  AgentEndpoint() = default;

  Kind kind_ = Kind::scripted;
  std::vector<std::string> responses_;
  std::size_t cursor_ = 0;
  std::string base_url_;
  std::string auth_token_;
  std::chrono::milliseconds timeout_{10000};
};

struct Transcript {
  struct Entry {
    enum class Role { readout, agent };
    Role role;
    std::string text;
  };
  std::vector<Entry> entries;

  std::size_t count(Entry::Role role) const;
  std::string to_text() const;
};

/// Alternating readout -> scripted response -> parse/apply loop, one turn
/// per scripted response, with a final readout after the script is
/// exhausted. Any parse/apply failure aborts with the transcript attached
/// to the error message.
std::pair<SpatialContext, Transcript> run_stub_session(AgentEndpoint& endpoint,
                                                       const SpatialContext& context,
                                                       const std::string& view_dir,
                                                       int resolution = 512);

}  // namespace sctx
