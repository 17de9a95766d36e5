#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vortex {

enum class ErrorCode {
  ZeroFrequency,
  CausticSingular,
  NonPositiveInterval,
  TimeTooSmall,
  NonFinite,
  ZeroNorm,
  ResolutionTooCoarse,
  AmplitudeTooSmall,
  CostExceeded,
  AliasingDetected,
  StepTooLarge,
  NoNodeFound,
  InsufficientSamples,
  InvalidArgument,
  InvalidConfig,
  MissingFrames,
  ManifestMismatch,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroFrequency: return "ZeroFrequency";
    case ErrorCode::CausticSingular: return "CausticSingular";
    case ErrorCode::NonPositiveInterval: return "NonPositiveInterval";
    case ErrorCode::TimeTooSmall: return "TimeTooSmall";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::AmplitudeTooSmall: return "AmplitudeTooSmall";
    case ErrorCode::CostExceeded: return "CostExceeded";
    case ErrorCode::AliasingDetected: return "AliasingDetected";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NoNodeFound: return "NoNodeFound";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingFrames: return "MissingFrames";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vortex
