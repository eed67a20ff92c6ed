#include "stray/errors.hpp"

namespace stray {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NoTrappedModes: return "NoTrappedModes";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::CutoffProximity: return "CutoffProximity";
    case ErrorKind::StencilOutOfDomain: return "StencilOutOfDomain";
    case ErrorKind::DegenerateGroupSpeed: return "DegenerateGroupSpeed";
    case ErrorKind::RankDeficientFan: return "RankDeficientFan";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::CutoffCrossing: return "CutoffCrossing";
    case ErrorKind::DomainExit: return "DomainExit";
    case ErrorKind::OutOfSpan: return "OutOfSpan";
    case ErrorKind::RankLoss: return "RankLoss";
    case ErrorKind::CausticBand: return "CausticBand";
    case ErrorKind::NoArrival: return "NoArrival";
    case ErrorKind::NewtonDivergence: return "NewtonDivergence";
    case ErrorKind::CausticAmbiguity: return "CausticAmbiguity";
    case ErrorKind::CausticEncounter: return "CausticEncounter";
    case ErrorKind::BranchMismatch: return "BranchMismatch";
    case ErrorKind::ZeroGradient: return "ZeroGradient";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::Config:
      return 2;
    case ErrorKind::OutOfDomain:
    case ErrorKind::NoTrappedModes:
    case ErrorKind::CutoffProximity:
    case ErrorKind::StencilOutOfDomain:
    case ErrorKind::DegenerateGroupSpeed:
    case ErrorKind::RankDeficientFan:
    case ErrorKind::CutoffCrossing:
    case ErrorKind::DomainExit:
    case ErrorKind::NoArrival:
    case ErrorKind::CausticEncounter:
    case ErrorKind::CausticAmbiguity:
    case ErrorKind::CausticBand:
    case ErrorKind::BranchMismatch:
    case ErrorKind::ZeroGradient:
      return 3;
    default:
      return 1;
  }
}

}  // namespace stray
