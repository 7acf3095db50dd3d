#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ridgeless/covariance.hpp"

namespace ridgeless {

/// (theta - theta0)^T Xi_z (theta - theta0).
double projected_rmse(const Vector& theta, const Vector& theta0, const SymMatrix& xi_z);
/// Same with Xi_z = diag(xi_diag), e.g. in the eigen frame.
double projected_rmse_diag(const Vector& theta, const Vector& theta0, const Vector& xi_diag);

struct EffectiveRanks {
  double r = 0.0;  // tr / ||.||_op
  double R = 0.0;  // tr^2 / tr(.^2)
};

EffectiveRanks effective_ranks(const SymMatrix& sigma);
EffectiveRanks effective_ranks_from_spectrum(const Vector& eigenvalues);

/// A norm given through its dual norm, a subgradient selector for the dual
/// norm, and sup_{||u|| <= 1} ||u||_Sigma.
struct NormSpec {
  enum class Kind { L2, L1, Custom };
  Kind kind = Kind::L2;
  std::function<double(const Vector&)> dual_norm;
  std::function<Vector(const Vector&)> selector;
  std::function<double(const SymMatrix&)> unit_ball_sup;

  static NormSpec l2() { return {}; }
  static NormSpec l1() { return {Kind::L1, {}, {}, {}}; }
};

struct NormRanks {
  double r_norm = 0.0;
  double R_norm = 0.0;
  double stderr_r = 0.0;
  double stderr_R = 0.0;
  double mean_dual = 0.0;  // Monte Carlo E ||Sigma^{1/2} H||_*
  double stderr_dual = 0.0;
};

NormRanks norm_effective_ranks(const SymMatrix& sigma, const NormSpec& norm, int mc_samples,
                               std::uint64_t seed);

/// E ||Sigma^{1/2} H||_2 for H ~ N(0, I), by quadrature over the Laplace
/// transform of sum_i lambda_i h_i^2.
double expected_gaussian_norm(const Vector& eigenvalues);

/// Scalar summaries of a model in its eigen coordinates.
struct SpectralQuantities {
  double tr_xi = 0.0;
  double op_xi = 0.0;
  double tr_xi2 = 0.0;
  double r_xi = 0.0;
  double R_xi = 0.0;
  Index rank_u = 0;
  double pinv_omega_norm = 0.0;          // ||Sigma_u^+ omega||
  double xi_half_pinv_omega_norm = 0.0;  // ||Xi_z^{1/2} Sigma_u^+ omega||
  double tr_u_xi = 0.0;                  // tr(Sigma_u Xi_z)
  double mixed = 0.0;                    // omega^T Sigma_u^+ Xi_z Sigma_u^+ omega
  double theta0_norm = 0.0;
  double sigma2 = 0.0;
  double sigma_tilde2 = 0.0;
  bool orthogonal = true;
  Vector z_eigs;
};

SpectralQuantities spectral_quantities(const Vector& u_eigs, const Vector& z_eigs,
                                       const Vector& omega_eig, double theta0_norm,
                                       double sigma2);
SpectralQuantities spectral_quantities(const EndogeneityModel& model);

/// sigma^2 - omega^T Sigma_u^+ omega, recomputed from omega.
double sigma_tilde2(const EndogeneityModel& model);

double eta_delta(const SpectralQuantities& q, Index n, double delta);
double eta_delta(const EndogeneityModel& model, Index n, double delta);

struct BoundReport {
  double delta = 0.0;
  double gamma_delta = 0.0;
  double eta_delta = 0.0;
  double epsilon = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double rmse_bound = 0.0;      // (1 + gamma) (B^2 tr / n - sigma_tilde^2)
  double rmse_principal = 0.0;  // (1 + eta) (1 v sigma_tilde) psi(.), up to a constant
  double norm_bound = 0.0;
  bool gamma_feasible = true;    // gamma <= 1
  bool epsilon_feasible = true;  // epsilon <= 1
  bool rank_condition = true;    // R(Xi_z) >= log(1/delta)^2
  std::map<std::string, double> constants_used;
};

constexpr double kRmseBoundConstant = 32.0;
/// Printed ceiling of the norm-bound constant for each split kind.
double literal_norm_constant(SplitKind kind);

BoundReport rmse_upper_bound(const SpectralQuantities& q, Index n, double delta, double B,
                             double c1 = kRmseBoundConstant);
BoundReport rmse_upper_bound(const EndogeneityModel& model, Index n, double delta, double B,
                             double c1 = kRmseBoundConstant);

/// ||theta0|| + ||Sigma_u^+ omega|| + (1 + eps)^{1/2} (2 eta1 + sigma_tilde + eta2) sqrt(n / tr Xi_z).
BoundReport norm_upper_bound(const SpectralQuantities& q, Index n, double delta, double c2 = 1.0,
                             double c_eta = 1.0);
BoundReport norm_upper_bound(const EndogeneityModel& model, Index n, double delta,
                             double c2 = 1.0, double c_eta = 1.0);

enum class ConditionMode { Orthogonal, NonOrthogonal, Exogenous };

struct SequenceVerdict {
  std::vector<double> values;
  bool decreasing = true;
  double final_value = 0.0;
};

struct ConditionReport {
  std::vector<Index> n_grid;
  ConditionMode mode = ConditionMode::Orthogonal;
  std::vector<std::string> names;  // in report order
  std::map<std::string, SequenceVerdict> sequences;
  bool all_decreasing() const;
};

using ModelFamily = std::function<SpectralQuantities(Index n)>;

std::vector<std::string> condition_sequence_names(ConditionMode mode);
ConditionReport evaluate_conditions(const ModelFamily& family, const std::vector<Index>& n_grid,
                                    ConditionMode mode);

void write_condition_report_csv(const ConditionReport& report, const std::string& path);
void write_bound_reports_csv(const std::vector<BoundReport>& reports, const std::string& path);

}  // namespace ridgeless
