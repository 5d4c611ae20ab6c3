#pragma once

#include <stdexcept>
#include <string>

namespace ykmpc {

enum class ErrorCode {
  InvalidArgument,
  SingularMatrix,
  NoConvergence,
  UnstableA,
  NoStabilizingSolution,
  Overflow,
  RankDeficient,
  IllPosed,
  UnstableSystem,
  PoleAtOne,
  IndefiniteH,
  UnstableClosedLoop,
  InfeasibleBoundsShape,
  Infeasible,
  MaxIterations,
  UndetectableAugmentation,
  IllPosedFeedthrough,
  UnstableAncillary,
  SingularDcGain,
  ValidationFailed,
  InternalInstability,
  NonzeroT22,
  UnstablePole,
  DegenerateLevel,
  SynthesisFailed,
  SolverFailed,
  IoError,
  ConfigError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnstableA: return "UnstableA";
    case ErrorCode::NoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::IllPosed: return "IllPosed";
    case ErrorCode::UnstableSystem: return "UnstableSystem";
    case ErrorCode::PoleAtOne: return "PoleAtOne";
    case ErrorCode::IndefiniteH: return "IndefiniteH";
    case ErrorCode::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorCode::InfeasibleBoundsShape: return "InfeasibleBoundsShape";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::UndetectableAugmentation: return "UndetectableAugmentation";
    case ErrorCode::IllPosedFeedthrough: return "IllPosedFeedthrough";
    case ErrorCode::UnstableAncillary: return "UnstableAncillary";
    case ErrorCode::SingularDcGain: return "SingularDcGain";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::InternalInstability: return "InternalInstability";
    case ErrorCode::NonzeroT22: return "NonzeroT22";
    case ErrorCode::UnstablePole: return "UnstablePole";
    case ErrorCode::DegenerateLevel: return "DegenerateLevel";
    case ErrorCode::SynthesisFailed: return "SynthesisFailed";
    case ErrorCode::SolverFailed: return "SolverFailed";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ykmpc
