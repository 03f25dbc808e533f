#pragma once

#include <stdexcept>
#include <string>

namespace gazekit {

enum class ErrorCode {
  DegenerateEyePosition,
  CoincidentTargetAndEye,
  RayAboveHorizon,
  NoBodyRay,
  ConfigError,
  IOFailure,
  TooFewSubjects,
  ShapeMismatch,
  DropoutDisabled,
  EmptyDataset,
  EmptyBatch,
  LengthMismatch,
  TooFewSamples,
  MissingSigma,
  NoConvergence,
  DegeneratePlane,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; inspect code() to dispatch.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gazekit
