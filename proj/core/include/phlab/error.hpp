#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phlab {

enum class ErrorCode {
  InvalidArgument,
  InvalidModel,
  NotHyperbolic,
  WrongSignature,
  NoConvergence,
  BundleNoConvergence,
  StepRejected,
  LeafTooShort,
  PlaqueCollision,
  RefinementExplosion,
  InsufficientSamples,
  ResolutionFloor,
  ConditionViolated,
  UlamNotConverged,
  NotContracting,
};

std::string_view to_string(ErrorCode code);

/// True for codes that mean "the model parameters are unacceptable" as
/// opposed to a numerical failure during an experiment.
bool is_model_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int detail = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  /// Extra integer payload, e.g. the failing condition index for ConditionViolated.
  int detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  int detail_;
};

}  // namespace phlab
