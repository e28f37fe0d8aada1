#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opencam {

enum class ErrorCode {
  BadMagic,
  TruncatedPayload,
  UnsupportedVersion,
  IoFailure,
  DecodeFailure,
  UnsupportedBitDepth,
  InvalidTensor,
  InvalidSpec,
  InvalidDims,
  DegenerateNoise,
  DegenerateKey,
  UnknownKind,
  ChannelMismatch,
  DimMismatch,
  FileMissing,
  EmptySet,
  NonFiniteObjective,
  ZeroTruth,
  TooSmall,
  ConfigError,
  MissingStudy,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code; the
// CLI maps codes onto its exit-code table.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace opencam
