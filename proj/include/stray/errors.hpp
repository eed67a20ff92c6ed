#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stray {

enum class ErrorKind {
  Parse,
  Validation,
  Config,
  OutOfDomain,
  NoTrappedModes,
  SolverFailure,
  GridMismatch,
  CutoffProximity,
  StencilOutOfDomain,
  DegenerateGroupSpeed,
  RankDeficientFan,
  StepFailure,
  CutoffCrossing,
  DomainExit,
  OutOfSpan,
  RankLoss,
  CausticBand,
  NoArrival,
  NewtonDivergence,
  CausticAmbiguity,
  CausticEncounter,
  BranchMismatch,
  ZeroGradient,
};

std::string_view to_string(ErrorKind kind);

/// Process exit status for a failure of this kind: 1 numeric, 2 config, 3 domain/physics.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string field = {})
      : std::runtime_error(std::move(message)), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Dotted path of the offending config entry, when there is one.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace stray
