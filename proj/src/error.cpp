#include "ridgeless/error.hpp"

#include <utility>

namespace ridgeless {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::InvalidSpectrum: return "InvalidSpectrum";
    case ErrorCode::NoSuchLevel: return "NoSuchLevel";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::EndogeneityTooStrong: return "EndogeneityTooStrong";
    case ErrorCode::OmegaOutsideRange: return "OmegaOutsideRange";
    case ErrorCode::InfiniteVariance: return "InfiniteVariance";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::InvalidLambda: return "InvalidLambda";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::MissingSelector: return "MissingSelector";
    case ErrorCode::ModelInconsistent: return "ModelInconsistent";
    case ErrorCode::DegenerateNoise: return "DegenerateNoise";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::InvalidRadius: return "InvalidRadius";
    case ErrorCode::NoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

ConvergenceFailure::ConvergenceFailure(const std::string& what,
                                       Eigen::VectorXd last_iterate, int iterations)
    : Error(ErrorCode::ConvergenceFailure, what),
      last_(std::move(last_iterate)),
      iterations_(iterations) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ridgeless
