#include "ridgeless/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ridgeless/error.hpp"
#include "ridgeless/rng.hpp"

namespace ridgeless {

namespace {

void check_design(const Matrix& X, const Vector& Y) {
  if (X.rows() != Y.size()) fail(ErrorCode::DimensionMismatch, "X rows differ from Y length");
  if (X.rows() == 0) fail(ErrorCode::InvalidData, "empty design");
  if (!X.allFinite() || !Y.allFinite()) fail(ErrorCode::InvalidData, "non-finite input");
}

FitResult finish(const Matrix& X, const Vector& Y, Vector theta, std::string method,
                 int iterations = 0) {
  FitResult f;
  f.training_loss = (Y - X * theta).squaredNorm() / static_cast<double>(X.rows());
  f.norm = theta.norm();
  f.theta_hat = std::move(theta);
  f.method = std::move(method);
  f.iterations = iterations;
  return f;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

Vector column_scales(const Matrix& X) {
  return (X.colwise().squaredNorm().transpose() / static_cast<double>(X.rows())).cwiseSqrt();
}

double kkt_standardized(const Matrix& Xs, const Vector& r, const Vector& beta,
                        const Vector& scales, double lambda) {
  const double n = static_cast<double>(Xs.rows());
  const Vector grad = Xs.transpose() * r / n;
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (scales(j) == 0.0) continue;
    const double v = beta(j) == 0.0 ? std::max(0.0, std::abs(grad(j)) - lambda)
                                    : std::abs(grad(j) - lambda * (beta(j) > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

Matrix standardize(const Matrix& X, const Vector& scales) {
  Matrix Xs = X;
  for (Index j = 0; j < X.cols(); ++j) {
    if (scales(j) > 0) Xs.col(j) /= scales(j);
  }
  return Xs;
}

}  // namespace

FitResult min_norm_interpolator(const Matrix& X, const Vector& Y) {
  check_design(X, Y);
  const SymMatrix gram(X * X.transpose());
  const Vector alpha = pseudoinverse(gram).dense() * Y;
  return finish(X, Y, X.transpose() * alpha, "ridgeless");
}

FitResult ridge(const Matrix& X, const Vector& Y, double lambda) {
  if (!(lambda > 0)) fail(ErrorCode::InvalidLambda, "ridge needs lambda > 0");
  check_design(X, Y);
  const Index n = X.rows();
  Matrix k = X * X.transpose();
  k.diagonal().array() += static_cast<double>(n) * lambda;
  const Vector alpha = k.ldlt().solve(Y);
  return finish(X, Y, X.transpose() * alpha, "ridge");
}

double lasso_kkt_residual(const Matrix& X, const Vector& Y, const Vector& theta,
                          double lambda) {
  check_design(X, Y);
  const Vector scales = column_scales(X);
  const Vector beta = theta.cwiseProduct(scales);
  return kkt_standardized(standardize(X, scales), Y - X * theta, beta, scales, lambda);
}

FitResult lasso_cd(const Matrix& X, const Vector& Y, double lambda, double tol, int max_iter) {
  if (!(lambda >= 0)) fail(ErrorCode::InvalidLambda, "lasso needs lambda >= 0");
  check_design(X, Y);
  const Index p = X.cols();
  const double n = static_cast<double>(X.rows());
  const Vector scales = column_scales(X);
  const Matrix Xs = standardize(X, scales);

  Vector beta = Vector::Zero(p);
  Vector r = Y;
  int sweeps = 0;
  while (true) {
    if (kkt_standardized(Xs, r, beta, scales, lambda) <= tol) break;
    if (sweeps >= max_iter) {
      Vector theta = beta;
      for (Index j = 0; j < p; ++j) theta(j) = scales(j) > 0 ? beta(j) / scales(j) : 0.0;
      throw ConvergenceFailure("lasso coordinate descent did not reach tolerance", theta, sweeps);
    }
    ++sweeps;
    for (Index j = 0; j < p; ++j) {
      if (scales(j) == 0.0) continue;
      const double updated = soft_threshold(beta(j) + Xs.col(j).dot(r) / n, lambda);
      const double delta = updated - beta(j);
      if (delta != 0.0) {
        r.noalias() -= delta * Xs.col(j);
        beta(j) = updated;
      }
    }
  }
  Vector theta(p);
  for (Index j = 0; j < p; ++j) theta(j) = scales(j) > 0 ? beta(j) / scales(j) : 0.0;
  return finish(X, Y, std::move(theta), "lasso", sweeps);
}

double plugin_lambda(double sigma_hat, Index n, Index p, double c) {
  return c * sigma_hat *
         std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) / static_cast<double>(n));
}

FitResult plugin_lasso(const Matrix& X, const Vector& Y, double c) {
  check_design(X, Y);
  const Index n = X.rows();
  const double sigma0 = std::sqrt(Y.squaredNorm() / static_cast<double>(n));
  const double tol = 1e-7 * std::max(1.0, sigma0);
  if (sigma0 == 0.0) return finish(X, Y, Vector::Zero(X.cols()), "lasso");
  const FitResult pilot = lasso_cd(X, Y, plugin_lambda(sigma0, n, X.cols(), c), tol);
  double sigma = std::sqrt(pilot.training_loss);
  if (!(sigma > 0)) sigma = sigma0;
  return lasso_cd(X, Y, plugin_lambda(sigma, n, X.cols(), c), tol);
}

namespace {

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Matrix take_cols(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

Vector take(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

// 2SLS coefficients of the endogenous block on the first half.
Vector first_half(const Matrix& Z, const Matrix& XE, const Vector& Y, double c) {
  const Index m = Z.rows();
  const Index q = Z.cols();
  const Index k = XE.cols();
  std::vector<bool> chosen(static_cast<std::size_t>(q), false);
  for (Index j = 0; j < k; ++j) {
    const FitResult fs = plugin_lasso(Z, XE.col(j), c);
    for (Index l = 0; l < q; ++l) {
      if (fs.theta_hat(l) != 0.0) chosen[static_cast<std::size_t>(l)] = true;
    }
  }
  // Instruments ranked by their strongest raw association with any endogenous column.
  const Vector score = (Z.transpose() * XE).cwiseAbs().rowwise().maxCoeff();
  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return score(a) > score(b); });
  std::vector<Index> selected;
  for (Index l : order) {
    if (chosen[static_cast<std::size_t>(l)]) selected.push_back(l);
  }
  for (Index l : order) {
    if (static_cast<Index>(selected.size()) >= k) break;
    if (!chosen[static_cast<std::size_t>(l)]) selected.push_back(l);
  }
  if (static_cast<Index>(selected.size()) > m - 1) selected.resize(static_cast<std::size_t>(m - 1));
  if (static_cast<Index>(selected.size()) < k) {
    fail(ErrorCode::SingularDesign, "fewer usable instruments than endogenous columns");
  }
  const Matrix ZS = take_cols(Z, selected);
  const Matrix D = ZS * ZS.colPivHouseholderQr().solve(XE);
  Eigen::ColPivHouseholderQR<Matrix> qr(D);
  if (qr.rank() < k) fail(ErrorCode::SingularDesign, "second-stage design is rank deficient");
  return qr.solve(Y);
}

}  // namespace

FitResult split_sample_lasso_iv(const Dataset& data, const std::vector<Index>& endo_idx,
                                const LassoIvOptions& options) {
  check_design(data.X, data.Y);
  const Index n = data.X.rows();
  const Index p = data.X.cols();
  if (data.W1.rows() != n) fail(ErrorCode::DimensionMismatch, "instrument rows differ from n");
  std::vector<Index> endo = endo_idx;
  std::sort(endo.begin(), endo.end());
  endo.erase(std::unique(endo.begin(), endo.end()), endo.end());
  for (Index j : endo) {
    if (j < 0 || j >= p) fail(ErrorCode::InvalidData, "endogenous index out of range");
  }
  if (2 * static_cast<Index>(endo.size()) >= n) {
    fail(ErrorCode::InvalidData, "need fewer than n/2 endogenous columns");
  }
  std::vector<Index> exo;
  {
    std::vector<bool> is_endo(static_cast<std::size_t>(p), false);
    for (Index j : endo) is_endo[static_cast<std::size_t>(j)] = true;
    for (Index j = 0; j < p; ++j) {
      if (!is_endo[static_cast<std::size_t>(j)]) exo.push_back(j);
    }
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Engine engine = make_engine(options.split_seed);
  std::shuffle(perm.begin(), perm.end(), engine);
  const std::vector<Index> half_a(perm.begin(), perm.begin() + n / 2);
  const std::vector<Index> half_b(perm.begin() + n / 2, perm.end());

  Vector theta = Vector::Zero(p);
  Vector beta = Vector::Zero(static_cast<Index>(endo.size()));
  if (!endo.empty()) {
    const Matrix xa = take_rows(data.X, half_a);
    beta = first_half(take_rows(data.W1, half_a), take_cols(xa, endo), take(data.Y, half_a),
                      options.c);
  }
  const Matrix xb = take_rows(data.X, half_b);
  const Vector y_tilde = take(data.Y, half_b) - take_cols(xb, endo) * beta;
  const FitResult second = plugin_lasso(take_cols(xb, exo), y_tilde, options.c);

  for (std::size_t i = 0; i < endo.size(); ++i) theta(endo[i]) = beta(static_cast<Index>(i));
  for (std::size_t i = 0; i < exo.size(); ++i) theta(exo[i]) = second.theta_hat(static_cast<Index>(i));
  return finish(data.X, data.Y, std::move(theta), "lasso_iv", second.iterations);
}

}  // namespace ridgeless
