#pragma once

#include <stdexcept>
#include <string>

namespace idorscan {

enum class ErrorCode {
  MalformedDocument,
  UnsupportedVersion,
  UnresolvableRef,
  SerializationFailure,
  InvalidPlan,
  LabelMismatch,
};

/// Thrown by the loader, serializers, corpus generator and metrics code.
/// The code distinguishes caller-recoverable conditions; the message is
/// meant for the diagnostic stream.
class ScanError : public std::runtime_error {
 public:
  ScanError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace idorscan
