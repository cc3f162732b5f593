// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sctx {

enum class ErrorCode {
  unknown_instance,
  empty_instance,
  label_mismatch,
  degenerate_geometry,
  empty_point_set,
  empty_cloud,
  parse_error,
  unknown_relation,
  arity_mismatch,
  invalid_transform,
  validation_failed,
  missing_pose,
  missing_mesh,
  duplicate_members,
  non_unit_axis,
  non_finite,
  script_exhausted,
  start_occupied,
  goal_occupied,
  no_path,
  ambiguous_name,
  io_error,
  version_mismatch,
  invalid_argument,
};

const char* error_code_name(ErrorCode code);

/// Engine-wide exception. Every domain failure named by an operation
/// contract maps onto one ErrorCode; the message carries specifics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_instance: return "UnknownInstance";
    case ErrorCode::empty_instance: return "EmptyInstance";
    case ErrorCode::label_mismatch: return "LabelMismatch";
    case ErrorCode::degenerate_geometry: return "DegenerateGeometry";
    case ErrorCode::empty_point_set: return "EmptyPointSet";
    case ErrorCode::empty_cloud: return "EmptyCloud";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::unknown_relation: return "UnknownRelation";
    case ErrorCode::arity_mismatch: return "ArityMismatch";
    case ErrorCode::invalid_transform: return "InvalidTransform";
    case ErrorCode::validation_failed: return "ValidationFailed";
    case ErrorCode::missing_pose: return "MissingPose";
    case ErrorCode::missing_mesh: return "MissingMesh";
    case ErrorCode::duplicate_members: return "DuplicateMembers";
    case ErrorCode::non_unit_axis: return "NonUnitAxis";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::script_exhausted: return "ScriptExhausted";
    case ErrorCode::start_occupied: return "StartOccupied";
    case ErrorCode::goal_occupied: return "GoalOccupied";
    case ErrorCode::no_path: return "NoPath";
    case ErrorCode::ambiguous_name: return "AmbiguousName";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

}  // namespace sctx
