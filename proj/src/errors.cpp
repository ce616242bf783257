#include "exirt/errors.hpp"

namespace exirt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableStream: return "UnreadableStream";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::UndefinedRatio: return "UndefinedRatio";
    case ErrorCode::NoParticipants: return "NoParticipants";
    case ErrorCode::NoActivity: return "NoActivity";
    case ErrorCode::NoAttempts: return "NoAttempts";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::UnmappedExercise: return "UnmappedExercise";
    case ErrorCode::EmptyItemSet: return "EmptyItemSet";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace exirt
