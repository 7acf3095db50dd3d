#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ridgeless/estimators.hpp"
#include "ridgeless/metrics.hpp"
#include "ridgeless/setups.hpp"
#include "test_helpers.hpp"

using namespace ridgeless;

TEST(MinNorm, SingleRow) {
  Matrix x(1, 2);
  x << 1, 0;
  Vector y(1);
  y << 3;
  const FitResult f = min_norm_interpolator(x, y);
  EXPECT_NEAR(f.theta_hat(0), 3, 1e-15);
  EXPECT_NEAR(f.theta_hat(1), 0, 1e-15);
}

TEST(MinNorm, IdentityDesign) {
  Vector y(4);
  y << 1, -2, 3, 0.5;
  EXPECT_LE((min_norm_interpolator(Matrix::Identity(4, 4), y).theta_hat - y).norm(), 1e-14);
}

TEST(MinNorm, RejectsNonFinite) {
  Matrix x = Matrix::Ones(2, 3);
  x(0, 0) = NAN;
  expect_error(ErrorCode::InvalidData, [&] { min_norm_interpolator(x, Vector::Ones(2)); });
}

TEST(MinNorm, MatchesCompleteOrthogonalDecomposition) {
  std::mt19937_64 eng(31);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = oracle::random_matrix(5, 12, eng);
    const Vector y = oracle::random_matrix(5, 1, eng);
    const Vector ref = x.completeOrthogonalDecomposition().solve(y);
    EXPECT_LE((min_norm_interpolator(x, y).theta_hat - ref).norm(), 1e-10 * ref.norm());
  }
}

TEST(MinNorm, RidgeLimitAndRowSpace) {
  std::mt19937_64 eng(32);
  const Matrix x = oracle::random_matrix(5, 12, eng);
  const Vector y = oracle::random_matrix(5, 1, eng);
  const Vector th = min_norm_interpolator(x, y).theta_hat;
  const Vector rd = ridge(x, y, 1e-10).theta_hat;
  EXPECT_LE((th - rd).norm(), 1e-6 * th.norm());
  const Matrix proj = Matrix::Identity(12, 12) - x.completeOrthogonalDecomposition().pseudoInverse() * x;
  EXPECT_LE((proj * th).norm(), 1e-8 * th.norm());
}

TEST(MinNorm, RankDeficientUsesPseudoinverse) {
  std::mt19937_64 eng(33);
  Matrix x = oracle::random_matrix(4, 9, eng);
  x.row(3) = x.row(0) + x.row(1);
  const Vector y = oracle::random_matrix(4, 1, eng);
  const Vector ref = x.completeOrthogonalDecomposition().solve(y);
  EXPECT_LE((min_norm_interpolator(x, y).theta_hat - ref).norm(), 1e-8 * ref.norm());
}

TEST(Ridge, ClosedFormsAndErrors) {
  Vector y(3);
  y << 1, 2, 3;
  const FitResult f = ridge(Matrix::Identity(3, 3), y, 0.5);
  EXPECT_LE((f.theta_hat - y / (1 + 3 * 0.5)).norm(), 1e-14);
  EXPECT_LE(ridge(Matrix::Identity(3, 3), y, 1e12).theta_hat.norm(), 1e-10);
  expect_error(ErrorCode::InvalidLambda, [&] { ridge(Matrix::Identity(3, 3), y, 0.0); });
}

TEST(Lasso, ZeroPenaltyGivesLeastSquares) {
  std::mt19937_64 eng(34);
  const Matrix x = oracle::random_matrix(60, 5, eng);
  const Vector y = oracle::random_matrix(60, 1, eng);
  const Vector ols = x.colPivHouseholderQr().solve(y);
  EXPECT_LE((lasso_cd(x, y, 0.0, 1e-10).theta_hat - ols).norm(), 1e-6);
}

TEST(Lasso, AboveLambdaMaxIsZero) {
  std::mt19937_64 eng(35);
  const Matrix x = oracle::random_matrix(30, 8, eng);
  const Vector y = oracle::random_matrix(30, 1, eng);
  double lmax = 0;
  for (Index j = 0; j < 8; ++j) {
    const double s = std::sqrt(x.col(j).squaredNorm() / 30);
    lmax = std::max(lmax, std::abs(x.col(j).dot(y)) / 30 / s);
  }
  EXPECT_EQ(lasso_cd(x, y, lmax * 1.0001).theta_hat.norm(), 0.0);
  EXPECT_GT(lasso_cd(x, y, lmax * 0.9).theta_hat.norm(), 0.0);
}

TEST(Lasso, OrthogonalDesignIsSoftThresholding) {
  const Index n = 16, p = 4;
  // Columns of a scaled Hadamard-like matrix with X^T X = n I.
  Matrix h(4, 4);
  h << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
  Matrix x(n, p);
  for (Index b = 0; b < 4; ++b) x.block(4 * b, 0, 4, 4) = h;
  std::mt19937_64 eng(36);
  const Vector y = oracle::random_matrix(static_cast<int>(n), 1, eng);
  const double lambda = 0.2;
  const Vector th = lasso_cd(x, y, lambda, 1e-12).theta_hat;
  const Vector z = x.transpose() * y / static_cast<double>(n);
  for (Index j = 0; j < p; ++j) EXPECT_NEAR(th(j), oracle::soft_threshold(z(j), lambda), 1e-10);
}

TEST(Lasso, KktConditionsHold) {
  std::mt19937_64 eng(37);
  const Matrix x = oracle::random_matrix(40, 100, eng);
  const Vector y = oracle::random_matrix(40, 1, eng);
  const double lambda = 0.1, tol = 1e-8;
  const Vector th = lasso_cd(x, y, lambda, tol).theta_hat;
  const Vector r = y - x * th;
  for (Index j = 0; j < 100; ++j) {
    const double s = std::sqrt(x.col(j).squaredNorm() / 40);
    const double g = x.col(j).dot(r) / 40 / s;
    if (th(j) == 0) {
      EXPECT_LE(std::abs(g), lambda + tol);
    } else {
      EXPECT_NEAR(g, lambda * (th(j) > 0 ? 1 : -1), tol);
    }
  }
  EXPECT_LE(lasso_kkt_residual(x, y, th, lambda), tol);
}

TEST(Lasso, ConvergenceFailureCarriesIterate) {
  std::mt19937_64 eng(38);
  const Matrix x = oracle::random_matrix(20, 30, eng);
  const Vector y = oracle::random_matrix(20, 1, eng);
  try {
    lasso_cd(x, y, 1e-4, 1e-14, 1);
    FAIL() << "expected ConvergenceFailure";
  } catch (const ConvergenceFailure& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConvergenceFailure);
    EXPECT_EQ(e.last_iterate().size(), 30);
    EXPECT_EQ(e.iterations(), 1);
  }
}

TEST(Lasso, PluginLambdaFormula) {
  EXPECT_NEAR(plugin_lambda(2.0, 100, 50), 1.1 * 2.0 * std::sqrt(2 * std::log(100.0) / 100), 1e-15);
}

TEST(LassoIv, NoEndogenousReducesToLassoOnSecondHalf) {
  const BuiltModel b = build_model(setup_preset("vii"), 60);
  const Dataset d = sample_dataset(b.model, 60, 5);
  const FitResult a = split_sample_lasso_iv(d, {}, {1.1, 9});
  const FitResult again = split_sample_lasso_iv(d, {}, {1.1, 9});
  EXPECT_EQ(a.theta_hat, again.theta_hat);
  EXPECT_EQ(a.theta_hat.size(), d.X.cols());
}

TEST(LassoIv, TooManyEndogenousRejected) {
  const BuiltModel b = build_model(setup_preset("vii"), 20);
  const Dataset d = sample_dataset(b.model, 20, 5);
  std::vector<Index> endo;
  for (Index j = 0; j < 10; ++j) endo.push_back(j);
  expect_error(ErrorCode::InvalidData, [&] { split_sample_lasso_iv(d, endo, {}); });
}

TEST(LassoIv, RidgelessBeatsBaselineOnSetupSeven) {
  const Index n = 200;
  const BuiltModel b = build_model(setup_preset("vii"), n);
  double ridge_sum = 0, iv_sum = 0;
  for (int r = 0; r < 5; ++r) {
    const Dataset d = sample_dataset(b.model, n, 100 + r);
    const Vector z = b.model.cov.z_eigs;
    ridge_sum += projected_rmse_diag(min_norm_interpolator(d.X, d.Y).theta_hat, b.model.theta0, z);
    iv_sum += projected_rmse_diag(split_sample_lasso_iv(d, b.endogenous, {1.1, 7}).theta_hat,
                                  b.model.theta0, z);
  }
  EXPECT_LT(ridge_sum, iv_sum);
}
