#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crosstrack {

enum class ErrorCode {
  InvalidBox,
  InvalidDetection,
  InvalidCalibration,
  InvalidConfig,
  AllBehindCamera,
  DegenerateProjection,
  MissingBox,
  NonPositiveExtent,
  DimensionMismatch,
  MissingEmbedding,
  FrameOrderViolation,
  CalibrationMissing,
  InfeasibleScene,
  InvalidFaultSpec,
  FrameMismatch,
  InvalidInput,
  Parse,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure path throws this with a code that
/// callers (and the CLI) can dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace crosstrack
