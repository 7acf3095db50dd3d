#include "ridgeless/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ridgeless/error.hpp"

namespace ridgeless {

double NoiseFloor::operator()(Index n) const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Constant: return value;
    case Kind::ExpSqrt: {
      const double s = std::sqrt(static_cast<double>(n));
      return std::exp(-s) / s;
    }
  }
  return 0.0;
}

Index DimensionRule::operator()(Index n) const {
  const double nn = static_cast<double>(n);
  switch (kind) {
    case Kind::Linear: return static_cast<Index>(std::llround(value * nn));
    case Kind::Power: return static_cast<Index>(std::llround(std::pow(nn, value)));
    case Kind::Fixed: return static_cast<Index>(std::llround(value));
  }
  return 0;
}

namespace {

struct SpectrumVisitor {
  Index n;
  Index p;

  Vector operator()(const LogPoly& s) const {
    if (!(s.scale > 0) || !(s.beta > 0) || !(s.log_factor > 0)) {
      fail(ErrorCode::InvalidProfile, "LogPoly needs positive scale, beta and log factor");
    }
    Vector v(p);
    for (Index i = 0; i < p; ++i) {
      const double idx = static_cast<double>(i + 1);
      v(i) = s.scale / idx * std::pow(std::log(idx + 1.0) * s.log_factor, -s.beta);
    }
    return v;
  }

  Vector operator()(const ExpPlusNoise& s) const {
    if (!(s.tau > 0) || !(s.scale > 0)) {
      fail(ErrorCode::InvalidProfile, "ExpPlusNoise needs positive tau and scale");
    }
    const double eps = s.floor(n);
    if (!(eps >= 0)) fail(ErrorCode::InvalidProfile, "negative noise floor");
    Vector v(p);
    for (Index i = 0; i < p; ++i) {
      v(i) = s.scale * std::exp(-static_cast<double>(i + 1) / s.tau) + eps;
    }
    return v;
  }

  Vector operator()(const Explicit& s) const {
    Vector v = Eigen::Map<const Vector>(s.values.data(), static_cast<Index>(s.values.size()));
    for (Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v(i)) || v(i) < 0 || (i > 0 && v(i) > v(i - 1))) {
        fail(ErrorCode::InvalidProfile, "explicit spectrum must be nonnegative and nonincreasing");
      }
    }
    return v;
  }
};

}  // namespace

Spectrum spectrum(const SpectrumProfile& profile, Index n) {
  if (n < 1) fail(ErrorCode::InvalidProfile, "sample size must be positive");
  Spectrum out;
  if (const auto* e = std::get_if<Explicit>(&profile.shape)) {
    out.p = static_cast<Index>(e->values.size());
  } else {
    out.p = profile.p_rule(n);
  }
  if (out.p < 1) fail(ErrorCode::InvalidProfile, "dimension rule gave p < 1");
  out.eigenvalues = std::visit(SpectrumVisitor{n, out.p}, profile.shape);
  return out;
}

Index truncation_level(const Vector& eigenvalues, Index n) {
  const Index p = eigenvalues.size();
  if (p == 0 || !(eigenvalues.maxCoeff() > 0)) {
    fail(ErrorCode::InvalidSpectrum, "spectrum has no positive eigenvalue");
  }
  // tail(k) = sum_{i >= k} lambda_i, accumulated from the small end.
  Vector tail(p + 1);
  tail(p) = 0.0;
  for (Index i = p - 1; i >= 0; --i) tail(i) = tail(i + 1) + eigenvalues(i);
  const double nn = static_cast<double>(n);
  for (Index k = 0; k < p; ++k) {
    const double lead = eigenvalues(k);
    if (lead <= 0) break;
    if (tail(k) / lead > nn) return k;
  }
  fail(ErrorCode::NoSuchLevel, "no truncation level exceeds n = " + std::to_string(n));
}

Matrix rotation_source(Index p) {
  Matrix m(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) m(i, j) = std::abs(i - j) != p - 2 ? 1.0 : 0.0;
  }
  return m;
}

namespace {

// First three columns of the rotation: Gram-Schmidt of 1 - e_{p-2}, 1 - e_{p-1}, 1.
Matrix rotation_head(Index p) {
  Matrix c = Matrix::Ones(p, 3);
  c(p - 2, 0) = 0.0;
  c(p - 1, 1) = 0.0;
  return gram_schmidt_with_fallback(c);
}

double structured_size(Index p, Index j) { return static_cast<double>(p - j + 1); }

}  // namespace

Matrix detail::rotation_closed_form(Index p) {
  if (p < 5) fail(ErrorCode::InvalidDimension, "closed form needs p >= 5");
  Matrix q = Matrix::Zero(p, p);
  q.leftCols(3) = rotation_head(p);
  for (Index j = 3; j <= p - 3; ++j) {
    const double m = structured_size(p, j);
    const double c = std::sqrt((m - 1.0) / m);
    for (Index i = 0; i < 3; ++i) q(i, j) = -1.0 / m / c;
    for (Index i = j; i <= p - 3; ++i) q(i, j) = -1.0 / m / c;
    q(j, j) += 1.0 / c;
  }
  q(0, p - 2) = -2.0 / std::sqrt(6.0);
  q(1, p - 2) = 1.0 / std::sqrt(6.0);
  q(2, p - 2) = 1.0 / std::sqrt(6.0);
  q(1, p - 1) = -1.0 / std::sqrt(2.0);
  q(2, p - 1) = 1.0 / std::sqrt(2.0);
  return q;
}

Matrix build_rotation(Index p) {
  if (p < 2) fail(ErrorCode::InvalidDimension, "rotation needs p >= 2");
  if (p >= 5) return detail::rotation_closed_form(p);
  return gram_schmidt_with_fallback(rotation_source(p));
}

Basis Basis::identity(Index p) {
  Basis b;
  b.kind_ = Kind::Identity;
  b.p_ = p;
  return b;
}

Basis Basis::permutation(std::vector<Index> image) {
  const Index p = static_cast<Index>(image.size());
  std::vector<bool> seen(image.size(), false);
  for (Index v : image) {
    if (v < 0 || v >= p || seen[v]) fail(ErrorCode::InvalidMatrix, "not a permutation");
    seen[v] = true;
  }
  Basis b;
  b.kind_ = Kind::Permutation;
  b.p_ = p;
  b.image_ = std::move(image);
  return b;
}

Basis Basis::indicator_rotation(Index p) {
  if (p < 5) return dense(build_rotation(p));
  Basis b;
  b.kind_ = Kind::IndicatorRotation;
  b.p_ = p;
  b.head_ = std::make_shared<const Matrix>(rotation_head(p));
  return b;
}

Basis Basis::dense(Matrix q) {
  if (q.rows() != q.cols()) fail(ErrorCode::InvalidMatrix, "basis must be square");
  const Index p = q.rows();
  const double err = (q.transpose() * q - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
  if (p > 0 && err > 1e-8) fail(ErrorCode::InvalidMatrix, "basis is not orthonormal");
  Basis b;
  b.kind_ = Kind::Dense;
  b.p_ = p;
  b.dense_ = std::make_shared<const Matrix>(std::move(q));
  return b;
}

Vector Basis::to_ambient(const Vector& w) const {
  if (w.size() != p_) fail(ErrorCode::DimensionMismatch, "vector length differs from basis");
  switch (kind_) {
    case Kind::Identity: return w;
    case Kind::Permutation: {
      Vector out(p_);
      for (Index j = 0; j < p_; ++j) out(image_[j]) = w(j);
      return out;
    }
    case Kind::Dense: return (*dense_) * w;
    case Kind::IndicatorRotation: {
      const Index p = p_;
      Vector out = head_->leftCols(3) * w.head(3);
      double running = 0.0;  // sum over j <= i of w_j / (c_j m_j)
      for (Index j = 3; j <= p - 3; ++j) {
        const double m = structured_size(p, j);
        const double c = std::sqrt((m - 1.0) / m);
        running += w(j) / (c * m);
        out(j) += w(j) / c - running;
      }
      for (Index i = 0; i < 3; ++i) out(i) -= running;
      out(0) += -2.0 / std::sqrt(6.0) * w(p - 2);
      out(1) += w(p - 2) / std::sqrt(6.0) - w(p - 1) / std::sqrt(2.0);
      out(2) += w(p - 2) / std::sqrt(6.0) + w(p - 1) / std::sqrt(2.0);
      return out;
    }
  }
  return w;
}

Vector Basis::to_eigen(const Vector& v) const {
  if (v.size() != p_) fail(ErrorCode::DimensionMismatch, "vector length differs from basis");
  switch (kind_) {
    case Kind::Identity: return v;
    case Kind::Permutation: {
      Vector out(p_);
      for (Index j = 0; j < p_; ++j) out(j) = v(image_[j]);
      return out;
    }
    case Kind::Dense: return dense_->transpose() * v;
    case Kind::IndicatorRotation: {
      const Index p = p_;
      Vector out(p);
      out.head(3) = head_->transpose() * v;
      const double lead = v(0) + v(1) + v(2);
      double suffix = 0.0;  // sum_{i=j}^{p-3} v_i
      for (Index j = p - 3; j >= 3; --j) {
        suffix += v(j);
        const double m = structured_size(p, j);
        const double c = std::sqrt((m - 1.0) / m);
        out(j) = (v(j) - (lead + suffix) / m) / c;
      }
      out(p - 2) = (-2.0 * v(0) + v(1) + v(2)) / std::sqrt(6.0);
      out(p - 1) = (v(2) - v(1)) / std::sqrt(2.0);
      return out;
    }
  }
  return v;
}

Matrix Basis::rows_to_ambient(const Matrix& m) const {
  if (m.cols() != p_) fail(ErrorCode::DimensionMismatch, "matrix width differs from basis");
  switch (kind_) {
    case Kind::Identity: return m;
    case Kind::Dense: return m * dense_->transpose();
    default: {
      Matrix out(m.rows(), m.cols());
      for (Index i = 0; i < m.rows(); ++i) out.row(i) = to_ambient(m.row(i).transpose()).transpose();
      return out;
    }
  }
}

Matrix Basis::matrix() const {
  switch (kind_) {
    case Kind::Identity: return Matrix::Identity(p_, p_);
    case Kind::Permutation: {
      Matrix q = Matrix::Zero(p_, p_);
      for (Index j = 0; j < p_; ++j) q(image_[j], j) = 1.0;
      return q;
    }
    case Kind::Dense: return *dense_;
    case Kind::IndicatorRotation: return detail::rotation_closed_form(p_);
  }
  return {};
}

SymMatrix CovarianceModel::sigma_u() const {
  return SymMatrix::from_spectrum(u_eigs, basis.matrix());
}

SymMatrix CovarianceModel::xi_z() const {
  return SymMatrix::from_spectrum(z_eigs, basis.matrix());
}

SymMatrix CovarianceModel::sigma_x() const {
  return SymMatrix::from_spectrum(base_eigs, basis.matrix());
}

Matrix CovarianceModel::instrument_loading() const {
  const Matrix q = basis.matrix();
  std::vector<Index> keep;
  for (Index i = 0; i < z_eigs.size(); ++i) {
    if (z_eigs(i) > 0) keep.push_back(i);
  }
  Matrix a(dim(), static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    a.col(static_cast<Index>(c)) = q.col(keep[c]) * std::sqrt(z_eigs(keep[c]));
  }
  return a;
}

namespace {

void check_split_inputs(const Vector& base, const Basis& basis, Index k) {
  if (base.size() != basis.dim()) {
    fail(ErrorCode::DimensionMismatch, "spectrum and basis sizes differ");
  }
  if (k < 0 || k > base.size()) fail(ErrorCode::InvalidDimension, "level outside [0, p]");
  for (Index i = 0; i < base.size(); ++i) {
    if (!std::isfinite(base(i)) || base(i) < 0 || (i > 0 && base(i) > base(i - 1))) {
      fail(ErrorCode::InvalidSpectrum, "spectrum must be nonnegative and nonincreasing");
    }
  }
}

}  // namespace

CovarianceModel split_orthogonal(const Vector& base_eigs, Basis basis, Index k) {
  check_split_inputs(base_eigs, basis, k);
  CovarianceModel m;
  m.basis = std::move(basis);
  m.base_eigs = base_eigs;
  m.u_eigs = Vector::Zero(base_eigs.size());
  m.u_eigs.head(k) = base_eigs.head(k);
  m.z_eigs = base_eigs;
  m.z_eigs.head(k).setZero();
  m.k_star = k;
  m.split = SplitKind::Orthogonal;
  return m;
}

CovarianceModel split_nonorthogonal(const Vector& base_eigs, Basis basis, Index k,
                                    double alpha, Index n) {
  if (!(alpha > 1)) fail(ErrorCode::InvalidAlpha, "alpha must exceed 1");
  check_split_inputs(base_eigs, basis, k);
  const double shrink = 1.0 - std::pow(static_cast<double>(n), -alpha);
  CovarianceModel m;
  m.basis = std::move(basis);
  m.base_eigs = base_eigs;
  m.u_eigs = Vector::Zero(base_eigs.size());
  m.u_eigs.head(k) = shrink * base_eigs.head(k);
  m.z_eigs = base_eigs - m.u_eigs;
  m.k_star = k;
  m.split = SplitKind::NonOrthogonal;
  m.alpha = alpha;
  return m;
}

namespace {

EndogeneityModel finish_model(CovarianceModel cov, const Vector& theta0, Vector rho_eig,
                              std::optional<double> sigma) {
  const Index p = cov.dim();
  if (theta0.size() != p) fail(ErrorCode::DimensionMismatch, "theta0 length differs from p");
  if (!theta0.allFinite() || !rho_eig.allFinite()) {
    fail(ErrorCode::InvalidData, "non-finite model parameters");
  }
  EndogeneityModel m;
  for (Index i = 0; i < p; ++i) {
    if (!(cov.u_eigs(i) > 0)) rho_eig(i) = 0.0;
  }
  const double rho2 = rho_eig.squaredNorm();
  double s = 1.0;
  if (sigma) {
    s = *sigma;
    if (!(s > 0)) fail(ErrorCode::InvalidData, "sigma must be positive");
  } else if (rho2 > 0) {
    s = 2.0 * std::sqrt(rho2);
  }
  m.sigma2 = s * s;
  if (rho2 > m.sigma2) {
    fail(ErrorCode::EndogeneityTooStrong, "||rho||^2 = " + std::to_string(rho2) +
                                              " exceeds sigma^2 = " + std::to_string(m.sigma2));
  }
  m.sigma_tilde2 = m.sigma2 - rho2;
  m.omega_eig = cov.u_eigs.cwiseSqrt().cwiseProduct(rho_eig);
  m.rho_eig = std::move(rho_eig);
  m.theta0 = theta0;
  m.theta0_eig = cov.basis.to_eigen(theta0);
  m.omega = cov.basis.to_ambient(m.omega_eig);
  m.rho = cov.basis.to_ambient(m.rho_eig);
  m.cov = std::move(cov);
  return m;
}

}  // namespace

EndogeneityModel assemble_model(CovarianceModel cov, const Vector& theta0,
                                const Vector& rho_eig, std::optional<double> sigma) {
  if (rho_eig.size() != cov.dim()) fail(ErrorCode::DimensionMismatch, "rho length differs from p");
  return finish_model(std::move(cov), theta0, rho_eig, sigma);
}

EndogeneityModel assemble_model_from_omega(CovarianceModel cov, const Vector& theta0,
                                           const Vector& omega, std::optional<double> sigma) {
  if (omega.size() != cov.dim()) fail(ErrorCode::DimensionMismatch, "omega length differs from p");
  const Vector w = cov.basis.to_eigen(omega);
  const double scale = std::max(w.cwiseAbs().maxCoeff(), 1e-300);
  Vector rho(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    if (cov.u_eigs(i) > 0) {
      rho(i) = w(i) / std::sqrt(cov.u_eigs(i));
    } else if (std::abs(w(i)) > 1e-12 * scale) {
      fail(ErrorCode::OmegaOutsideRange, "omega has mass outside range(Sigma_u)");
    } else {
      rho(i) = 0.0;
    }
  }
  return finish_model(std::move(cov), theta0, rho, sigma);
}

SymMatrix joint_covariance(const EndogeneityModel& model) {
  const Index p = model.dim();
  Matrix j = Matrix::Identity(2 * p + 1, 2 * p + 1);
  j.block(p, 2 * p, p, 1) = model.rho;
  j.block(2 * p, p, 1, p) = model.rho.transpose();
  j(2 * p, 2 * p) = model.sigma2;
  return SymMatrix(j);
}

double joint_covariance_min_eigenvalue(const EndogeneityModel& model) {
  const double r2 = model.rho.squaredNorm();
  const double s2 = model.sigma2;
  const double block_min = 0.5 * ((1.0 + s2) - std::sqrt((1.0 - s2) * (1.0 - s2) + 4.0 * r2));
  return std::min(1.0, block_min);
}

}  // namespace ridgeless
