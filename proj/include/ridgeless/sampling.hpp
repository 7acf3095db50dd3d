#pragma once

#include <cstdint>
#include <string>

#include "ridgeless/covariance.hpp"

namespace ridgeless {

struct InstrumentLaw {
  enum class Kind { Gaussian, StudentT };
  Kind kind = Kind::Gaussian;
  double dof = 0.0;

  static InstrumentLaw gaussian() { return {}; }
  static InstrumentLaw student_t(double dof) { return {Kind::StudentT, dof}; }
};

/// Coordinates of a dataset. Eigen-frame data are the ambient data times Q,
/// with theta0 and Xi_z replaced by theta0_eig and diag(z_eigs).
enum class Frame { Ambient, Eigen };

struct Dataset {
  Matrix X;
  Vector Y;
  Vector xi;
  Matrix W1;
  Matrix W2;
  std::uint64_t seed = 0;
  Frame frame = Frame::Ambient;
  std::string model_id;
};

/// X_i = Xi_z^{1/2} W1_i + Sigma_u^{1/2} W2_i, xi_i = rho^T W2_i + sigma_tilde g_i,
/// Y = X theta0 + xi. Under student_t only W1 is replaced by variance-matched
/// multivariate-t rows.
Dataset sample_dataset(const EndogeneityModel& model, Index n, std::uint64_t seed,
                       const InstrumentLaw& law = InstrumentLaw::gaussian(),
                       Frame frame = Frame::Ambient, const std::string& model_id = "");

/// n rows of cov_factor * t_i, where t_i = z_i sqrt((dof - 2) / chi2_dof) has
/// identity covariance.
Matrix sample_mvt(double dof, const Matrix& cov_factor, Index n, std::uint64_t seed);

/// Header x1..xp,y,xi then one row per observation.
void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace ridgeless
