#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ridgeless/covariance.hpp"
#include "ridgeless/metrics.hpp"
#include "ridgeless/setups.hpp"
#include "test_helpers.hpp"

using namespace ridgeless;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

SpectrumProfile explicit_profile(std::vector<double> v) {
  return {Explicit{std::move(v)}, {DimensionRule::Kind::Fixed, 0.0}};
}

}  // namespace

TEST(Spectrum, LogPolyFirstEigenvalue) {
  const SpectrumProfile prof{LogPoly{300, 2, std::exp(1.0) / 2}, {DimensionRule::Kind::Linear, 5}};
  const Spectrum s = spectrum(prof, 40);
  EXPECT_EQ(s.p, 200);
  EXPECT_NEAR(s.eigenvalues(0), 300 * std::pow(std::log(2.0) * std::exp(1.0) / 2, -2), 1e-12);
  EXPECT_DOUBLE_EQ(kSetupLogFactor, std::exp(1.0) / 2);
}

TEST(Spectrum, ExplicitPassthrough) {
  for (Index n : {1, 7, 1000}) {
    const Spectrum s = spectrum(explicit_profile({5, 3, 1}), n);
    EXPECT_EQ(s.eigenvalues, vec({5, 3, 1}));
  }
}

TEST(Spectrum, ExpPlusNoise) {
  const SpectrumProfile prof{ExpPlusNoise{2, 10, {NoiseFloor::Kind::ExpSqrt, 0}},
                             {DimensionRule::Kind::Power, 1.5}};
  const Spectrum s = spectrum(prof, 100);
  EXPECT_EQ(s.p, 1000);
  for (Index i = 1; i <= s.p; i += 97) {
    EXPECT_NEAR(s.eigenvalues(i - 1), 10 * std::exp(-i / 2.0) + std::exp(-10.0) / 10, 1e-15);
  }
}

TEST(Spectrum, InvalidProfiles) {
  expect_error(ErrorCode::InvalidProfile, [] {
    spectrum({LogPoly{-1, 2, 1}, {DimensionRule::Kind::Linear, 5}}, 10);
  });
  expect_error(ErrorCode::InvalidProfile, [] {
    spectrum({LogPoly{1, 0, 1}, {DimensionRule::Kind::Linear, 5}}, 10);
  });
  expect_error(ErrorCode::InvalidProfile, [] {
    spectrum({ExpPlusNoise{0, 1, {}}, {DimensionRule::Kind::Linear, 5}}, 10);
  });
  expect_error(ErrorCode::InvalidProfile, [] { spectrum(explicit_profile({1, 2}), 10); });
}

TEST(Truncation, HandExample) {
  EXPECT_EQ(truncation_level(vec({10, 1, 1, 1, 1}), 2), 1);
  EXPECT_EQ(truncation_level(Vector::Ones(10), 8), 0);
  expect_error(ErrorCode::InvalidSpectrum, [] { truncation_level(Vector::Zero(4), 2); });
  expect_error(ErrorCode::NoSuchLevel, [] { truncation_level(Vector::Ones(4), 10); });
}

TEST(Truncation, SetupOneAtN200MatchesScanAndFrozenValue) {
  const Spectrum s = spectrum(setup_preset("i").profile, 200);
  ASSERT_EQ(s.p, 1000);
  const Index k = truncation_level(s.eigenvalues, 200);
  EXPECT_EQ(k, oracle::truncation_scan(s.eigenvalues, 200));
  EXPECT_EQ(k, oracle::frozen::k_star_setup_i_n200);
}

TEST(Truncation, MinimalityOnSetupSpectra) {
  for (const char* id : {"i", "ii"}) {
    for (Index n = 100; n <= 800; n += 100) {
      const Vector lam = spectrum(setup_preset(id).profile, n).eigenvalues;
      const Index k = truncation_level(lam, n);
      auto r_tail = [&](Index j) { return lam.tail(lam.size() - j).sum() / lam(j); };
      EXPECT_GT(r_tail(k), n) << id << " n=" << n;
      if (k >= 1) {
        EXPECT_LE(r_tail(k - 1), n) << id << " n=" << n;
      }
    }
  }
}

TEST(Rotation, SourceMatrixMatchesDefinition) {
  for (Index p : {2, 3, 4, 7, 12}) {
    EXPECT_EQ(rotation_source(p), oracle::indicator_matrix(static_cast<int>(p)));
  }
}

TEST(Rotation, SmallDimensionsUseFallback) {
  // At p = 2 the indicator rule gives the swap matrix, which is already full rank.
  const Matrix p2 = oracle::indicator_matrix(2);
  EXPECT_EQ(p2(0, 0), 0.0);
  EXPECT_EQ(p2(0, 1), 1.0);
  const Matrix q2 = build_rotation(2);
  EXPECT_LE((q2.transpose() * q2 - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  // At p = 3 columns 1 and 3 coincide and the fallback engages.
  const Matrix p3 = oracle::indicator_matrix(3);
  EXPECT_EQ(p3.col(0), p3.col(2));
  const Matrix q3 = build_rotation(3);
  EXPECT_LE((q3 - oracle::classical_gram_schmidt(p3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((q3.transpose() * q3 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  expect_error(ErrorCode::InvalidDimension, [] { build_rotation(1); });
}

TEST(Rotation, OrthonormalWithUnitDeterminant) {
  for (Index p = 2; p <= 40; ++p) {
    const Matrix q = build_rotation(p);
    EXPECT_LE((q.transpose() * q - Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-10) << p;
    EXPECT_NEAR(std::abs(q.determinant()), 1.0, 1e-8) << p;
  }
}

TEST(Rotation, ClosedFormMatchesGenericGramSchmidt) {
  for (Index p = 5; p <= 100; ++p) {
    const Matrix generic = oracle::classical_gram_schmidt(oracle::indicator_matrix(static_cast<int>(p)));
    EXPECT_LE((detail::rotation_closed_form(p) - generic).cwiseAbs().maxCoeff(), 1e-10) << p;
  }
}

TEST(Basis, ImplicitApplyMatchesDenseMatrix) {
  std::mt19937_64 eng(11);
  for (Index p : {2, 3, 4, 5, 6, 17, 64}) {
    const Basis b = Basis::indicator_rotation(p);
    const Matrix q = build_rotation(p);
    EXPECT_LE((b.matrix() - q).cwiseAbs().maxCoeff(), 1e-12);
    const Vector v = oracle::random_matrix(static_cast<int>(p), 1, eng);
    EXPECT_LE((b.to_ambient(v) - q * v).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((b.to_eigen(v) - q.transpose() * v).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix m = oracle::random_matrix(3, static_cast<int>(p), eng);
    EXPECT_LE((b.rows_to_ambient(m) - m * q.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Basis, PermutationAndDense) {
  const Basis b = Basis::permutation({2, 0, 1});
  const Vector v = vec({1, 2, 3});
  EXPECT_EQ(b.to_ambient(v), b.matrix() * v);
  EXPECT_EQ(b.to_eigen(b.to_ambient(v)), v);
  expect_error(ErrorCode::InvalidMatrix, [] { Basis::permutation({0, 0}); });
  expect_error(ErrorCode::InvalidMatrix, [] { Basis::dense(Matrix::Ones(2, 2)); });
}

TEST(Split, OrthogonalExamples) {
  const Vector eigs = vec({3, 2, 1});
  const CovarianceModel c1 = split_orthogonal(eigs, Basis::identity(3), 1);
  EXPECT_EQ(c1.sigma_u().dense(), Matrix(vec({3, 0, 0}).asDiagonal()));
  EXPECT_EQ(c1.xi_z().dense(), Matrix(vec({0, 2, 1}).asDiagonal()));
  EXPECT_EQ(split_orthogonal(eigs, Basis::identity(3), 0).sigma_u().dense().norm(), 0.0);
  EXPECT_EQ(split_orthogonal(eigs, Basis::identity(3), 3).xi_z().dense().norm(), 0.0);
}

TEST(Split, NonOrthogonalExample) {
  const CovarianceModel c = split_nonorthogonal(vec({2, 1}), Basis::identity(2), 1, 1.01, 10);
  const double a = std::pow(10.0, -1.01);
  EXPECT_NEAR(c.sigma_u().dense()(0, 0), 2 * (1 - a), 1e-15);
  EXPECT_NEAR(c.xi_z().dense()(0, 0), 2 * a, 1e-15);
  EXPECT_NEAR(c.xi_z().dense()(1, 1), 1, 1e-15);
  expect_error(ErrorCode::InvalidAlpha, [] {
    split_nonorthogonal(vec({2, 1}), Basis::identity(2), 1, 1.0, 10);
  });
}

TEST(Split, NonOrthogonalCrossTracePositiveExactlyWhenTruncated) {
  const Vector eigs = vec({5, 3, 2, 1});
  for (Index k = 0; k <= 4; ++k) {
    const CovarianceModel c = split_nonorthogonal(eigs, Basis::identity(4), k, 1.5, 20);
    const double cross = (c.sigma_u().dense() * c.xi_z().dense()).trace();
    if (k == 0) {
      EXPECT_EQ(cross, 0.0);
    } else {
      EXPECT_GT(cross, 0.0);
    }
  }
  // Large n approaches the orthogonal split.
  const CovarianceModel far = split_nonorthogonal(eigs, Basis::identity(4), 2, 1.5, 1000000);
  EXPECT_LT((far.sigma_u().dense() * far.xi_z().dense()).trace(), 1e-7);
}

TEST(Split, IdentitiesWithRotation) {
  const Vector eigs = spectrum(setup_preset("i").profile, 20).eigenvalues;
  const Index k = truncation_level(eigs, 20);
  for (int ortho = 0; ortho < 2; ++ortho) {
    const CovarianceModel c = ortho ? split_orthogonal(eigs, Basis::indicator_rotation(100), k)
                                    : split_nonorthogonal(eigs, Basis::indicator_rotation(100), k, 1.01, 20);
    const Matrix sx = c.sigma_x().dense();
    EXPECT_LE((c.sigma_u().dense() + c.xi_z().dense() - sx).cwiseAbs().maxCoeff(),
              1e-12 * sx.cwiseAbs().maxCoeff());
    if (ortho) {
      EXPECT_LE((c.sigma_u().dense() * c.xi_z().dense()).cwiseAbs().maxCoeff(),
                1e-10 * sym_eig(c.sigma_x()).values(0));
      EXPECT_EQ(numerical_rank(c.u_eigs) + numerical_rank(c.z_eigs), numerical_rank(c.base_eigs));
    }
    const Matrix a = c.instrument_loading();
    EXPECT_LE((a * a.transpose() - c.xi_z().dense()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Assemble, HandExample) {
  const CovarianceModel c = split_orthogonal(vec({1, 0}), Basis::identity(2), 1);
  const EndogeneityModel m = assemble_model(c, Vector::Zero(2), vec({0.5, 0}), 1.0);
  EXPECT_NEAR(m.omega(0), 0.5, 1e-15);
  EXPECT_EQ(m.omega(1), 0.0);
  EXPECT_NEAR(m.sigma_tilde2, 0.75, 1e-15);
  EXPECT_NEAR(sigma_tilde2(m), 0.75, 1e-15);
}

TEST(Assemble, ExogenousAndTooStrong) {
  const CovarianceModel c = split_orthogonal(vec({2, 1, 1}), Basis::identity(3), 1);
  const EndogeneityModel m = assemble_model(c, Vector::Ones(3), Vector::Zero(3), 1.5);
  EXPECT_EQ(m.omega.norm(), 0.0);
  EXPECT_DOUBLE_EQ(m.sigma_tilde2, 2.25);
  EXPECT_DOUBLE_EQ(assemble_model(c, Vector::Ones(3), Vector::Zero(3)).sigma2, 1.0);
  expect_error(ErrorCode::EndogeneityTooStrong,
               [&] { assemble_model(c, Vector::Ones(3), vec({2, 0, 0}), 1.0); });
  expect_error(ErrorCode::OmegaOutsideRange,
               [&] { assemble_model_from_omega(c, Vector::Ones(3), vec({0, 1, 0}), 5.0); });
}

TEST(Assemble, SetupTwoAcceptedWithPositiveNoise) {
  const BuiltModel b = build_model(setup_preset("ii"), 100);
  EXPECT_GT(b.model.sigma_tilde2, 0.0);
  EXPECT_NEAR(b.model.sigma_tilde2, 0.75 * b.model.sigma2, 1e-12);
  const Index k = b.model.cov.k_star;
  for (Index i = 1; i <= k; ++i) EXPECT_NEAR(b.model.rho_eig(i - 1), 3 * std::exp(-i / 4.0), 1e-15);
}

TEST(Assemble, RandomModelsSigmaTildeIdentity) {
  std::mt19937_64 eng(12);
  std::uniform_real_distribution<double> unif(0.1, 2);
  for (int t = 0; t < 20; ++t) {
    const Index p = 6;
    Vector eigs(p);
    for (Index i = 0; i < p; ++i) eigs(i) = unif(eng);
    std::sort(eigs.data(), eigs.data() + p, std::greater<>());
    const CovarianceModel c = split_nonorthogonal(eigs, Basis::indicator_rotation(p), 3, 1.2, 10);
    const Vector rho = oracle::random_matrix(static_cast<int>(p), 1, eng);
    const EndogeneityModel m = assemble_model(c, Vector::Ones(p), rho);
    EXPECT_NEAR(sigma_tilde2(m), m.sigma2 - m.rho_eig.squaredNorm(), 1e-10);
    EXPECT_NEAR(m.sigma_tilde2, m.sigma2 - m.rho.squaredNorm(), 1e-10);
  }
}

TEST(JointCovariance, ClosedFormMinimumEigenvalueMatchesDense) {
  const BuiltModel b = build_model(setup_preset("iii"), 8);
  const SymMatrix joint = joint_covariance(b.model);
  ASSERT_EQ(joint.dim(), 2 * b.model.dim() + 1);
  EXPECT_NEAR(sym_eig(joint).values.minCoeff(), joint_covariance_min_eigenvalue(b.model), 1e-10);
  EXPECT_GE(joint_covariance_min_eigenvalue(b.model), -1e-8);
}

TEST(Setups, EveryPresetAssemblesValidModel) {
  for (const auto& id : preset_ids()) {
    const BuiltModel b = build_model(setup_preset(id), 100);
    const EndogeneityModel& m = b.model;
    const Vector w = m.cov.basis.to_eigen(m.omega);
    double quad = 0;
    for (Index i = 0; i < w.size(); ++i) {
      if (m.cov.u_eigs(i) > 0) quad += w(i) * w(i) / m.cov.u_eigs(i);
    }
    EXPECT_LE(quad, m.sigma2 * (1 + 1e-12)) << id;
    EXPECT_GE(joint_covariance_min_eigenvalue(m), -1e-8) << id;
  }
}

TEST(Setups, OverCorrelatedModelIsRejected) {
  SetupSpec spec = setup_preset("i");
  const BuiltModel b = build_model(spec, 100);
  spec.sigma = std::sqrt(b.model.sigma2);
  spec.correlation.scale *= 10;
  expect_error(ErrorCode::EndogeneityTooStrong, [&] { build_model(spec, 100); });
}

TEST(Setups, SparseThetaFollowsStrideRule) {
  const BuiltModel b = build_model(setup_preset("v"), 100);
  for (Index i = 1; i <= b.model.dim(); ++i) {
    const double expect = (i <= 100 && (i + 4) % 5 == 0) ? 20 / std::sqrt(double(i)) : 0.0;
    EXPECT_EQ(b.model.theta0(i - 1), expect) << i;
  }
}

TEST(Setups, RelocationKeepsEndogenousInRange) {
  const Index n = 100;
  const BuiltModel vii = build_model(setup_preset("vii"), n);
  const BuiltModel ix = build_model(setup_preset("ix"), n);
  EXPECT_EQ(vii.endogenous.size(), 10u);
  EXPECT_EQ(ix.endogenous.size(), 10u);
  EXPECT_NE(vii.endogenous, ix.endogenous);
  EXPECT_NEAR(vii.model.sigma_tilde2, ix.model.sigma_tilde2, 1e-12);
}

TEST(Setups, JsonRoundTrip) {
  for (const auto& id : preset_ids()) {
    const SetupSpec a = setup_preset(id);
    const SetupSpec b = setup_from_json(setup_to_json(a));
    EXPECT_EQ(setup_to_json(a), setup_to_json(b)) << id;
  }
  expect_error(ErrorCode::InvalidConfig, [] { setup_from_json(nlohmann::json{{"spectrum", 3}}); });
  expect_error(ErrorCode::InvalidConfig, [] { setup_preset("x"); });
}
