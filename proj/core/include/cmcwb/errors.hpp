#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmcwb {

// Failure classes shared by all modules. Each operation documents which
// codes it can raise; anything else escaping is a bug.
enum class ErrorCode {
  NonConvergence,
  InvalidParameter,
  MissingTauDerivatives,
  ProjectionNotUnique,
  NewtonDiverged,
  BoxTooSmall,
  SingularSystem,
  NoRoot,
  StencilOutOfDomain,
  SingularMatrix,
  NotOrthogonal,
  IllConditioned,
  ParallelEnds,
  PerturbationTooLarge,
  NoContraction,
  ConfigInvalid,
  OutsideTube,
  GhostLayerMissing,
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::MissingTauDerivatives: return "MissingTauDerivatives";
    case ErrorCode::ProjectionNotUnique: return "ProjectionNotUnique";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::BoxTooSmall: return "BoxTooSmall";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::StencilOutOfDomain: return "StencilOutOfDomain";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NotOrthogonal: return "NotOrthogonal";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::ParallelEnds: return "ParallelEnds";
    case ErrorCode::PerturbationTooLarge: return "PerturbationTooLarge";
    case ErrorCode::NoContraction: return "NoContraction";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::OutsideTube: return "OutsideTube";
    case ErrorCode::GhostLayerMissing: return "GhostLayerMissing";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

inline void require(bool condition, ErrorCode code, const std::string& detail) {
  if (!condition) fail(code, detail);
}

}  // namespace cmcwb
