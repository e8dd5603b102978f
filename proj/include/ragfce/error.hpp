#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragfce {

enum class ErrorCode {
  // data / usage side
  UnknownCode,
  Parse,
  DuplicateId,
  EmptyFile,
  EmptyInput,
  NoInconsistentSamples,
  EmptyCorpus,
  InvalidArgument,
  Io,
  Template,
  LayoutMismatch,
  DatasetMismatch,
  // backend / model output side
  ExhaustedRetries,
  Authentication,
  RequestTooLarge,
  BackendRequest,
  MockMiss,
  CacheMiss,
  UnparseableOutput,
  UnparseableVerdict,
  DegenerateOutput,
  // run outcome
  PartialResult,
};

std::string_view to_string(ErrorCode code);

/// Process exit code a CLI run should report for an error of this kind:
/// 2 data error, 3 backend failure, 4 partial completion.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace ragfce
