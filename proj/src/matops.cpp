#include "ridgeless/matops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ridgeless/error.hpp"

namespace ridgeless {

double default_rel_tol(Index dim) {
  return static_cast<double>(std::max<Index>(dim, 1)) *
         std::numeric_limits<double>::epsilon() * 64.0;
}

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() != a.cols()) {
    fail(ErrorCode::InvalidMatrix, "matrix is " + std::to_string(a.rows()) + "x" +
                                       std::to_string(a.cols()) + ", not square");
  }
  if (!a.allFinite()) fail(ErrorCode::InvalidMatrix, "matrix has non-finite entries");
  const double scale = a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
  const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(scale, 1e-300)) {
    fail(ErrorCode::InvalidMatrix, "matrix is not symmetric (max asymmetry " +
                                       std::to_string(asym) + ")");
  }
  a_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  SymMatrix s;
  s.a_ = d.asDiagonal();
  return s;
}

SymMatrix SymMatrix::from_spectrum(const Vector& values, const Matrix& basis) {
  if (basis.rows() != basis.cols() || basis.cols() != values.size()) {
    fail(ErrorCode::DimensionMismatch, "basis and spectrum sizes differ");
  }
  Matrix a = basis * values.asDiagonal() * basis.transpose();
  SymMatrix s;
  s.a_ = 0.5 * (a + a.transpose());
  return s;
}

SymMatrix operator*(double c, const SymMatrix& s) { return SymMatrix(c * s.dense()); }

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) fail(ErrorCode::DimensionMismatch, "sum of unequal sizes");
  return SymMatrix(a.dense() + b.dense());
}

Matrix EigenDecomp::reconstruct() const {
  return vectors * values.asDiagonal() * vectors.transpose();
}

EigenDecomp sym_eig(const SymMatrix& a) {
  const Index p = a.dim();
  EigenDecomp out;
  if (p == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.dense());
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::InvalidMatrix, "eigendecomposition did not converge");
  }
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Index j = 0; j < p; ++j) {
    auto col = out.vectors.col(j);
    for (Index i = 0; i < p; ++i) {
      if (std::abs(col(i)) > 1e-10) {
        if (col(i) < 0) col = -col;
        break;
      }
    }
  }
  return out;
}

namespace {

Vector spectral_map(const EigenDecomp& e, double tol, bool sqrt_mode) {
  const double top = e.values.size() == 0 ? 0.0 : e.values.cwiseAbs().maxCoeff();
  const double cut = tol * top;
  Vector out(e.values.size());
  for (Index i = 0; i < e.values.size(); ++i) {
    const double v = e.values(i);
    if (v < -cut) {
      fail(ErrorCode::NotPSD, "eigenvalue " + std::to_string(v) + " below -" +
                                  std::to_string(cut));
    }
    if (v <= cut) {
      out(i) = 0.0;
    } else {
      out(i) = sqrt_mode ? std::sqrt(v) : 1.0 / v;
    }
  }
  return out;
}

}  // namespace

SymMatrix pseudoinverse(const SymMatrix& a, std::optional<double> rel_tol) {
  const EigenDecomp e = sym_eig(a);
  const Vector inv = spectral_map(e, rel_tol.value_or(default_rel_tol(a.dim())), false);
  return SymMatrix::from_spectrum(inv, e.vectors);
}

SymMatrix psd_sqrt(const SymMatrix& a, std::optional<double> rel_tol) {
  const EigenDecomp e = sym_eig(a);
  const Vector root = spectral_map(e, rel_tol.value_or(default_rel_tol(a.dim())), true);
  return SymMatrix::from_spectrum(root, e.vectors);
}

Matrix null_space_basis(const Matrix& m, std::optional<double> rel_tol) {
  const Index p = m.cols();
  if (m.rows() == 0 || p == 0) return Matrix::Identity(p, p);
  if (!m.allFinite()) fail(ErrorCode::InvalidMatrix, "matrix has non-finite entries");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double tol = rel_tol.value_or(default_rel_tol(std::max(m.rows(), p)));
  const double cut = s.size() == 0 ? 0.0 : tol * s(0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return svd.matrixV().rightCols(p - rank);
}

Matrix gram_schmidt_with_fallback(const Matrix& m, double dependence_tol) {
  const Index rows = m.rows();
  const Index cols = m.cols();
  if (cols > rows) fail(ErrorCode::DimensionMismatch, "more columns than rows");
  Matrix q(rows, cols);
  auto orthogonalize = [&](Vector v, Index done) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Index k = 0; k < done; ++k) v -= q.col(k).dot(v) * q.col(k);
    }
    return v;
  };
  for (Index j = 0; j < cols; ++j) {
    Vector v = orthogonalize(m.col(j), j);
    double norm = v.norm();
    if (norm < dependence_tol) {
      for (Index t = 0; t < rows; ++t) {
        const Index idx = (j + t) % rows;
        v = orthogonalize(Vector::Unit(rows, idx), j);
        norm = v.norm();
        if (norm >= dependence_tol) break;
      }
    }
    q.col(j) = v / norm;
  }
  return q;
}

Index numerical_rank(const Vector& eigenvalues, std::optional<double> rel_tol) {
  if (eigenvalues.size() == 0) return 0;
  const double top = eigenvalues.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0;
  const double cut = rel_tol.value_or(default_rel_tol(eigenvalues.size())) * top;
  return (eigenvalues.array() > cut).count();
}

}  // namespace ridgeless
