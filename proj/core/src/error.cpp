#include "npe/error.hpp"

namespace npe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSyntax: return "malformed_syntax";
    case ErrorCode::ChannelCountMismatch: return "channel_count_mismatch";
    case ErrorCode::UnknownChannel: return "unknown_channel";
    case ErrorCode::FrameOutOfRange: return "frame_out_of_range";
    case ErrorCode::MissingMapping: return "missing_mapping";
    case ErrorCode::MappedJointNotFound: return "mapped_joint_not_found";
    case ErrorCode::NonFiniteInput: return "non_finite_input";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::StaleCache: return "stale_cache";
    case ErrorCode::CorruptHeader: return "corrupt_header";
    case ErrorCode::SizeMismatch: return "size_mismatch";
    case ErrorCode::NanLoss: return "nan_loss";
    case ErrorCode::UntrainedModel: return "untrained_model";
    case ErrorCode::NoSolverForJoints: return "no_solver_for_joints";
    case ErrorCode::InvalidTargets: return "invalid_targets";
    case ErrorCode::OverlappingTargets: return "overlapping_targets";
    case ErrorCode::UncoveredJoint: return "uncovered_joint";
    case ErrorCode::UnknownSession: return "unknown_session";
    case ErrorCode::UndoEmpty: return "undo_empty";
    case ErrorCode::ServiceNotInitialized: return "service_not_initialized";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

ParseError::ParseError(ErrorCode code, const std::string& message, int line, int column)
    : Error(code, message + " (line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ")"),
      line_(line),
      column_(column) {}

}  // namespace npe
