#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dom {

enum class ErrorCode {
  DegeneratePolygon,
  InvalidGeometry,
  NoPath,
  InvalidStart,
  InvalidGoal,
  RejectionLimit,
  EndpointMismatch,
  ConcatenationInfeasible,
  MissingCrossing,
  CenteringInfeasible,
  TransferInfeasible,
  DegenerateAngle,
  NoFeasibleTarget,
  DegenerateTangent,
  ZeroDistance,
  StepBudgetExhausted,
  EscapeInfeasible,
  Schema,
};

std::string_view to_string(ErrorCode code);

/// Domain failure carrying a machine-readable code. Everything the library
/// throws on purpose is an `Error`; anything else is a bug.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dom
