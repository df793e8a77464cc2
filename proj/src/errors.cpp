#include "genread/errors.hpp"

namespace genread {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::EmptyResponse: return "EmptyResponse";
    case ErrorCode::ReferenceNotFound: return "ReferenceNotFound";
    case ErrorCode::InputTooLong: return "InputTooLong";
    case ErrorCode::ConstraintUnsatisfied: return "ConstraintUnsatisfied";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::TooFewSentences: return "TooFewSentences";
    case ErrorCode::EmptySegmentCandidates: return "EmptySegmentCandidates";
    case ErrorCode::DuplicateStoryIds: return "DuplicateStoryIds";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::AnswerCountMismatch: return "AnswerCountMismatch";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::Configuration: return "Configuration";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::EmptyResponse:
    case ErrorCode::ReferenceNotFound:
    case ErrorCode::InputTooLong:
    case ErrorCode::Configuration:
      return 2;
    case ErrorCode::StorageFailure:
    case ErrorCode::IoFailure:
      return 4;
    case ErrorCode::PreconditionViolated:
      return 1;
    default:
      return 3;
  }
}

}  // namespace genread
