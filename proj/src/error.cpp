#include "gazekit/error.hpp"

namespace gazekit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateEyePosition: return "DegenerateEyePosition";
    case ErrorCode::CoincidentTargetAndEye: return "CoincidentTargetAndEye";
    case ErrorCode::RayAboveHorizon: return "RayAboveHorizon";
    case ErrorCode::NoBodyRay: return "NoBodyRay";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IOFailure: return "IOFailure";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DropoutDisabled: return "DropoutDisabled";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MissingSigma: return "MissingSigma";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
  }
  return "Unknown";
}

}  // namespace gazekit
