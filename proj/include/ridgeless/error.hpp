#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ridgeless {

enum class ErrorCode {
  InvalidMatrix,
  DimensionMismatch,
  NotPSD,
  InvalidProfile,
  InvalidSpectrum,
  NoSuchLevel,
  InvalidDimension,
  InvalidAlpha,
  EndogeneityTooStrong,
  OmegaOutsideRange,
  InfiniteVariance,
  InvalidData,
  InvalidLambda,
  ConvergenceFailure,
  SingularDesign,
  ZeroMatrix,
  MissingSelector,
  ModelInconsistent,
  DegenerateNoise,
  InvalidDelta,
  InvalidRadius,
  NoFeasiblePoint,
  InvalidConfig,
  IoError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown by iterative solvers; keeps the last iterate so callers can inspect it.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, Eigen::VectorXd last_iterate,
                     int iterations);
  const Eigen::VectorXd& last_iterate() const noexcept { return last_; }
  int iterations() const noexcept { return iterations_; }

 private:
  Eigen::VectorXd last_;
  int iterations_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace ridgeless
