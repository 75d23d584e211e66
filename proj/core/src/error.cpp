#include "phlab/error.hpp"

namespace phlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::WrongSignature: return "WrongSignature";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BundleNoConvergence: return "BundleNoConvergence";
    case ErrorCode::StepRejected: return "StepRejected";
    case ErrorCode::LeafTooShort: return "LeafTooShort";
    case ErrorCode::PlaqueCollision: return "PlaqueCollision";
    case ErrorCode::RefinementExplosion: return "RefinementExplosion";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ResolutionFloor: return "ResolutionFloor";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::UlamNotConverged: return "UlamNotConverged";
    case ErrorCode::NotContracting: return "NotContracting";
  }
  return "Unknown";
}

bool is_model_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidModel:
    case ErrorCode::NotHyperbolic:
    case ErrorCode::WrongSignature:
    case ErrorCode::ConditionViolated:
      return true;
    default:
      return false;
  }
}

}  // namespace phlab
