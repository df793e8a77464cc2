#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genread {

enum class ErrorCode {
  PreconditionViolated,
  ProviderUnavailable,
  EmptyResponse,
  ReferenceNotFound,
  InputTooLong,
  ConstraintUnsatisfied,
  ZeroVector,
  DimMismatch,
  TooFewSentences,
  EmptySegmentCandidates,
  DuplicateStoryIds,
  IllegalTransition,
  AnswerCountMismatch,
  UnknownSession,
  StorageFailure,
  MalformedInput,
  Configuration,
  ValidationFailed,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

// Process exit status for a failure of the given kind:
// 1 usage, 2 provider, 3 validation, 4 I/O.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::PreconditionViolated, message);
}

}  // namespace genread
