#pragma once

#include <optional>

#include <Eigen/Dense>

namespace ridgeless {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative rank cutoff: dim * machine epsilon * 64.
double default_rel_tol(Index dim);

/// Symmetric real matrix. The stored matrix is exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Throws InvalidMatrix when `a` is not square, not finite, or not symmetric
  /// up to 1e-10 relative; the stored copy is (a + a^T) / 2.
  explicit SymMatrix(const Matrix& a);

  static SymMatrix diagonal(const Vector& d);
  /// basis * diag(values) * basis^T.
  static SymMatrix from_spectrum(const Vector& values, const Matrix& basis);

  const Matrix& dense() const { return a_; }
  Index dim() const { return a_.rows(); }
  double trace() const { return a_.trace(); }

 private:
  Matrix a_;
};

SymMatrix operator*(double c, const SymMatrix& s);
SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);

struct EigenDecomp {
  Vector values;   // descending
  Matrix vectors;  // columns, first nonzero component positive
  Matrix reconstruct() const;
};

EigenDecomp sym_eig(const SymMatrix& a);

/// Moore-Penrose inverse of a PSD matrix; eigenvalues <= rel_tol * max are cut.
SymMatrix pseudoinverse(const SymMatrix& a, std::optional<double> rel_tol = {});

/// PSD square root with the same cutoff rule.
SymMatrix psd_sqrt(const SymMatrix& a, std::optional<double> rel_tol = {});

/// Orthonormal basis (columns) of the null space of an m x p matrix.
Matrix null_space_basis(const Matrix& m, std::optional<double> rel_tol = {});

/// Modified Gram-Schmidt over the columns of m in index order. A column whose
/// residual norm falls below dependence_tol is replaced by the matching
/// standard basis vector, which is then orthogonalized the same way.
Matrix gram_schmidt_with_fallback(const Matrix& m, double dependence_tol = 1e-10);

/// Number of eigenvalues above rel_tol * max |eigenvalue|.
Index numerical_rank(const Vector& eigenvalues, std::optional<double> rel_tol = {});

}  // namespace ridgeless
