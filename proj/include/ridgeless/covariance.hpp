#pragma once

#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "ridgeless/matops.hpp"

namespace ridgeless {

/// lambda_i = scale * i^-1 * (log(i+1) * log_factor)^-beta.
struct LogPoly {
  double scale = 1.0;
  double beta = 2.0;
  double log_factor = 1.0;
};

/// Noise floor eps_n added to every eigenvalue of ExpPlusNoise.
struct NoiseFloor {
  enum class Kind { None, Constant, ExpSqrt };  // ExpSqrt: exp(-sqrt n) / sqrt n
  Kind kind = Kind::None;
  double value = 0.0;
  double operator()(Index n) const;
};

/// lambda_i = scale * exp(-i / tau) + eps_n.
struct ExpPlusNoise {
  double tau = 1.0;
  double scale = 1.0;
  NoiseFloor floor;
};

struct Explicit {
  std::vector<double> values;
};

struct DimensionRule {
  enum class Kind { Linear, Power, Fixed };  // round(v n), round(n^v), v
  Kind kind = Kind::Linear;
  double value = 5.0;
  Index operator()(Index n) const;
};

struct SpectrumProfile {
  std::variant<LogPoly, ExpPlusNoise, Explicit> shape;
  DimensionRule p_rule;  // ignored for Explicit
};

struct Spectrum {
  Index p = 0;
  Vector eigenvalues;
};

Spectrum spectrum(const SpectrumProfile& profile, Index n);

/// Smallest k with sum_{i>k} lambda_i / lambda_{k+1} > n (0-based count of
/// leading eigenvalues removed). Throws NoSuchLevel when no k qualifies.
Index truncation_level(const Vector& eigenvalues, Index n);

/// The 0/1 matrix P with P(j, j') = 1{|j - j'| != p - 2}.
Matrix rotation_source(Index p);

/// Gram-Schmidt of the columns of rotation_source(p) with basis-vector fallback.
Matrix build_rotation(Index p);

namespace detail {
/// O(p^2) closed form of build_rotation for p >= 5.
Matrix rotation_closed_form(Index p);
}  // namespace detail

/// Orthonormal p x p matrix Q whose columns are the shared eigenvectors.
/// Identity, permutation and the indicator rotation are applied implicitly.
class Basis {
 public:
  enum class Kind { Identity, Permutation, IndicatorRotation, Dense };

  static Basis identity(Index p);
  /// Column j of Q is e_{image[j]}.
  static Basis permutation(std::vector<Index> image);
  /// Q = build_rotation(p), applied in O(p) per vector when p >= 5.
  static Basis indicator_rotation(Index p);
  static Basis dense(Matrix q);

  Kind kind() const { return kind_; }
  Index dim() const { return p_; }

  Vector to_ambient(const Vector& eig) const;   // Q v
  Vector to_eigen(const Vector& ambient) const;  // Q^T v
  /// m Q^T: each row of m, read in eigen coordinates, mapped to ambient ones.
  Matrix rows_to_ambient(const Matrix& m) const;
  Matrix matrix() const;

 private:
  Kind kind_ = Kind::Identity;
  Index p_ = 0;
  std::vector<Index> image_;
  std::shared_ptr<const Matrix> dense_;
  std::shared_ptr<const Matrix> head_;  // first three columns of the rotation
};

enum class SplitKind { Orthogonal, NonOrthogonal };

/// Sigma_u and Xi_z share the basis Q; only their spectra are stored.
struct CovarianceModel {
  Basis basis;
  Vector base_eigs;
  Vector u_eigs;
  Vector z_eigs;
  Index k_star = 0;
  SplitKind split = SplitKind::Orthogonal;
  double alpha = 0.0;

  Index dim() const { return base_eigs.size(); }
  SymMatrix sigma_u() const;
  SymMatrix xi_z() const;
  SymMatrix sigma_x() const;
  /// A with Xi_z = A A^T, p x rank(Xi_z).
  Matrix instrument_loading() const;
};

CovarianceModel split_orthogonal(const Vector& base_eigs, Basis basis, Index k);

/// Sigma_u = (1 - n^-alpha) * top-k part, Xi_z = base - Sigma_u.
CovarianceModel split_nonorthogonal(const Vector& base_eigs, Basis basis, Index k,
                                    double alpha, Index n);

struct EndogeneityModel {
  CovarianceModel cov;
  Vector theta0;  // ambient coordinates
  Vector omega;   // E[X xi]
  Vector rho;     // (Sigma_u^{1/2})^+ omega
  Vector theta0_eig;
  Vector omega_eig;
  Vector rho_eig;
  double sigma2 = 1.0;
  double sigma_tilde2 = 1.0;

  Index dim() const { return cov.dim(); }
};

/// rho_eig is given in eigen coordinates; its part outside range(Sigma_u) is
/// dropped. sigma defaults to 2 ||rho||, or 1 when rho vanishes.
EndogeneityModel assemble_model(CovarianceModel cov, const Vector& theta0,
                                const Vector& rho_eig,
                                std::optional<double> sigma = {});

/// omega in ambient coordinates; must lie in range(Sigma_u).
EndogeneityModel assemble_model_from_omega(CovarianceModel cov, const Vector& theta0,
                                           const Vector& omega,
                                           std::optional<double> sigma = {});

/// Joint covariance of (W1, W2, xi), size 2p + 1.
SymMatrix joint_covariance(const EndogeneityModel& model);

/// Smallest eigenvalue of joint_covariance, in closed form.
double joint_covariance_min_eigenvalue(const EndogeneityModel& model);

}  // namespace ridgeless
