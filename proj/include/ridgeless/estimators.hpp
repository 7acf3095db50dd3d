#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridgeless/sampling.hpp"

namespace ridgeless {

struct FitResult {
  Vector theta_hat;
  std::string method;
  double training_loss = 0.0;  // ||Y - X theta||^2 / n
  double norm = 0.0;
  int iterations = 0;
};

/// theta = X^T (X X^T)^+ Y.
FitResult min_norm_interpolator(const Matrix& X, const Vector& Y);

/// theta = X^T (X X^T + n lambda I)^{-1} Y.
FitResult ridge(const Matrix& X, const Vector& Y, double lambda);

/// Coordinate descent for (1/2n)||Y - X theta||^2 + lambda sum_j s_j |theta_j|
/// with s_j = sqrt(X_j^T X_j / n), i.e. the plain lasso on standardized
/// columns. Stops when the standardized KKT residual is <= tol.
FitResult lasso_cd(const Matrix& X, const Vector& Y, double lambda, double tol = 1e-8,
                   int max_iter = 100000);

/// Largest violation of the standardized lasso optimality conditions.
double lasso_kkt_residual(const Matrix& X, const Vector& Y, const Vector& theta,
                          double lambda);

/// c * sigma * sqrt(2 log(2p) / n).
double plugin_lambda(double sigma_hat, Index n, Index p, double c = 1.1);

/// Lasso at the plug-in level with sigma refreshed once from the residual.
FitResult plugin_lasso(const Matrix& X, const Vector& Y, double c = 1.1);

struct LassoIvOptions {
  double c = 1.1;
  std::uint64_t split_seed = 0;
};

/// Split-sample lasso-IV. Instruments are the columns of data.W1. The first
/// half estimates the endogenous block by 2SLS on lasso-selected instruments,
/// the second half fits the exogenous block by lasso on Y - X_E beta.
FitResult split_sample_lasso_iv(const Dataset& data, const std::vector<Index>& endo_idx,
                                const LassoIvOptions& options = {});

}  // namespace ridgeless
