#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace npe {

enum class ErrorCode {
  MalformedSyntax,
  ChannelCountMismatch,
  UnknownChannel,
  FrameOutOfRange,
  MissingMapping,
  MappedJointNotFound,
  NonFiniteInput,
  EmptyInput,
  DimensionMismatch,
  ShapeMismatch,
  StaleCache,
  CorruptHeader,
  SizeMismatch,
  NanLoss,
  UntrainedModel,
  NoSolverForJoints,
  InvalidTargets,
  OverlappingTargets,
  UncoveredJoint,
  UnknownSession,
  UndoEmpty,
  ServiceNotInitialized,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Syntax error in a text input; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, int line, int column);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace npe
