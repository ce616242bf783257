#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exirt {

enum class ErrorCode {
  UnreadableStream,
  MalformedRow,
  UnknownKind,
  UndefinedRatio,
  NoParticipants,
  NoActivity,
  NoAttempts,
  OutOfRange,
  EmptyGroup,
  UnmappedExercise,
  EmptyItemSet,
  EmptyGrid,
  DimensionMismatch,
  DegenerateMatrix,
  IdMismatch,
  LengthMismatch,
  InvalidSpec,
  SchemaMismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace exirt
