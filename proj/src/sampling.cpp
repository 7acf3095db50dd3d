#include "ridgeless/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "ridgeless/error.hpp"
#include "ridgeless/rng.hpp"

namespace ridgeless {

namespace {

constexpr std::uint64_t kStreamW1 = 1;
constexpr std::uint64_t kStreamW2 = 2;
constexpr std::uint64_t kStreamNoise = 3;
constexpr std::uint64_t kStreamChi2 = 4;

void check_dof(double dof) {
  if (!(dof > 2)) fail(ErrorCode::InfiniteVariance, "student-t needs dof > 2");
}

// Scales row i of w by sqrt((dof - 2) / chi2_i).
void apply_t_scaling(Matrix& w, double dof, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  std::chi_squared_distribution<double> chi2(dof);
  for (Index i = 0; i < w.rows(); ++i) w.row(i) *= std::sqrt((dof - 2.0) / chi2(engine));
}

}  // namespace

Dataset sample_dataset(const EndogeneityModel& model, Index n, std::uint64_t seed,
                       const InstrumentLaw& law, Frame frame, const std::string& model_id) {
  if (n < 1) fail(ErrorCode::InvalidData, "sample size must be positive");
  if (law.kind == InstrumentLaw::Kind::StudentT) check_dof(law.dof);
  const Index p = model.dim();
  const CovarianceModel& cov = model.cov;

  Engine e1 = make_engine(derive_seed(seed, kStreamW1));
  Engine e2 = make_engine(derive_seed(seed, kStreamW2));
  Engine e3 = make_engine(derive_seed(seed, kStreamNoise));
  Matrix w1 = standard_normal(n, p, e1);
  Matrix w2 = standard_normal(n, p, e2);
  const Vector g = standard_normal(n, e3);
  if (law.kind == InstrumentLaw::Kind::StudentT) {
    apply_t_scaling(w1, law.dof, derive_seed(seed, kStreamChi2));
  }

  Dataset d;
  d.seed = seed;
  d.frame = frame;
  d.model_id = model_id;
  d.xi = w2 * model.rho_eig + std::sqrt(model.sigma_tilde2) * g;
  Matrix x = w1 * cov.z_eigs.cwiseSqrt().asDiagonal();
  x.noalias() += w2 * cov.u_eigs.cwiseSqrt().asDiagonal();
  if (frame == Frame::Eigen) {
    d.Y = x * model.theta0_eig + d.xi;
    d.X = std::move(x);
    d.W1 = std::move(w1);
    d.W2 = std::move(w2);
  } else {
    d.X = cov.basis.rows_to_ambient(x);
    d.W1 = cov.basis.rows_to_ambient(w1);
    d.W2 = cov.basis.rows_to_ambient(w2);
    d.Y = d.X * model.theta0 + d.xi;
  }
  return d;
}

Matrix sample_mvt(double dof, const Matrix& cov_factor, Index n, std::uint64_t seed) {
  check_dof(dof);
  if (n < 1) fail(ErrorCode::InvalidData, "sample size must be positive");
  Engine engine = make_engine(derive_seed(seed, kStreamW1));
  Matrix t = standard_normal(n, cov_factor.cols(), engine);
  apply_t_scaling(t, dof, derive_seed(seed, kStreamChi2));
  return t * cov_factor.transpose();
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  const Index p = data.X.cols();
  for (Index j = 0; j < p; ++j) out << 'x' << (j + 1) << ',';
  out << "y,xi\n";
  char buf[32];
  for (Index i = 0; i < data.X.rows(); ++i) {
    for (Index j = 0; j < p; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", data.X(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", data.Y(i));
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g\n", data.xi(i));
    out << buf;
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace ridgeless
