#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ridgeless/covariance.hpp"

namespace ridgeless {

/// max y^T A y + 2 g^T y over ||y|| <= radius, with A symmetric.
struct TrustRegionResult {
  Vector y;
  double value = 0.0;
  double multiplier = 0.0;  // mu with (mu I - A) y = g
  double residual = 0.0;    // relative stationarity residual
  bool hard_case = false;
};

TrustRegionResult maximize_quadratic_on_ball(const SymMatrix& A, const Vector& g, double radius);

struct PoInstance {
  Matrix W1;
  Matrix W2;
  Vector xi;
  double radius = 0.0;
  Vector theta0;
  SymMatrix xi_z;
  SymMatrix sigma_u;
};

struct PoSolution {
  double value = 0.0;
  Vector theta_prime;  // theta - theta0 at the maximum
  double multiplier = 0.0;
  double stationarity_residual = 0.0;
};

/// max ||Xi_z^{1/2} t||^2 over {t : M t = xi, ||t + theta0|| <= B}.
/// Throws NoFeasiblePoint when the affine set misses the ball.
PoSolution solve_po_design(const Matrix& M, const Vector& xi, const SymMatrix& xi_z,
                           const Vector& theta0, double radius);

/// The primary optimization with M = W1 Xi_z^{1/2} + W2 Sigma_u^{1/2}.
PoSolution solve_po(const PoInstance& inst);

struct AoOptions {
  int starts = 32;
  int iterations = 200;
  double shrink = 0.5;
  std::uint64_t seed = 0;
};

struct AoSolution {
  double value = 0.0;  // best feasible objective; 0 when nothing feasible was found
  bool feasible = false;
  Vector theta_prime;
  int feasible_starts = 0;
};

/// Auxiliary optimization: max ||theta1||^2 subject to
/// ||xi - W2 theta2 - G ||theta1|| || <= <theta1, H>, with theta1 = Xi_z^{1/2} t,
/// theta2 = Sigma_u^{1/2} t and ||t + theta0|| <= B. Multi-start projected
/// ascent; the value is attained at a point that passes the constraint exactly,
/// so it is a lower bound on the true maximum.
AoSolution solve_ao(const Matrix& W2, const Vector& xi, const Vector& G, const Vector& H,
                    const SymMatrix& xi_z, const SymMatrix& sigma_u, const Vector& theta0,
                    double radius, const AoOptions& options = {});

/// Constraint function of the auxiliary problem (feasible iff <= 0).
double ao_constraint(const Matrix& W2, const Vector& xi, const Vector& G, const Vector& H,
                     const SymMatrix& xi_z, const SymMatrix& sigma_u, const Vector& t);

/// Small model used by the tail check: Setup-(i) eigenvalues, indicator
/// rotation, orthogonal split with Sigma_u on the top p/2 directions,
/// theta0_i = 20/sqrt(i), rho_i = 2/i and B = 2 ||theta0||.
struct CgmtSlice {
  EndogeneityModel model;
  double radius = 0.0;
};

CgmtSlice default_cgmt_slice(Index p = 4);

struct TailOptions {
  Index reps = 10000;
  int c_points = 20;
  std::vector<double> c_grid;  // quantiles of the pooled values when empty
  std::uint64_t seed = 0;
  int threads = 1;
  AoOptions ao;
};

struct TailReport {
  Index n = 0;
  Index p = 0;
  Index reps = 0;
  std::vector<double> c_grid;
  std::vector<double> p_phi_gt;     // PO tail P(Phi > c)
  std::vector<double> p_phi_ao_ge;  // AO tail P(phi >= c)
  std::vector<double> stderr_po;
  std::vector<double> stderr_ao;
  std::vector<bool> violated;
  int violations = 0;
  Index po_feasible = 0;
  Index ao_feasible = 0;
  std::vector<double> phi_po;  // -inf when infeasible
  std::vector<double> phi_ao;  // -inf when infeasible
};

TailReport tail_dominance_check(const CgmtSlice& slice, Index n, const TailOptions& options);

void write_tail_report_csv(const TailReport& report, const std::string& path);

}  // namespace ridgeless
