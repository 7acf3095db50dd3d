#include "ridgeless/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "ridgeless/error.hpp"
#include "ridgeless/rng.hpp"

namespace ridgeless {

double projected_rmse(const Vector& theta, const Vector& theta0, const SymMatrix& xi_z) {
  if (theta.size() != theta0.size() || theta.size() != xi_z.dim()) {
    fail(ErrorCode::DimensionMismatch, "projected_rmse sizes differ");
  }
  const Vector d = theta - theta0;
  return std::max(0.0, d.dot(xi_z.dense() * d));
}

double projected_rmse_diag(const Vector& theta, const Vector& theta0, const Vector& xi_diag) {
  if (theta.size() != theta0.size() || theta.size() != xi_diag.size()) {
    fail(ErrorCode::DimensionMismatch, "projected_rmse sizes differ");
  }
  const Vector d = theta - theta0;
  return std::max(0.0, d.cwiseProduct(d).dot(xi_diag));
}

EffectiveRanks effective_ranks_from_spectrum(const Vector& eigenvalues) {
  const double top = eigenvalues.size() == 0 ? 0.0 : eigenvalues.maxCoeff();
  if (!(top > 0)) fail(ErrorCode::ZeroMatrix, "effective ranks of a zero matrix");
  const double tr = eigenvalues.sum();
  return {tr / top, tr * tr / eigenvalues.squaredNorm()};
}

EffectiveRanks effective_ranks(const SymMatrix& sigma) {
  const EigenDecomp e = sym_eig(sigma);
  if (e.values.size() == 0 || !(e.values(0) > 0)) {
    fail(ErrorCode::ZeroMatrix, "effective ranks of a zero matrix");
  }
  const double cut = default_rel_tol(sigma.dim()) * e.values(0);
  if (e.values(e.values.size() - 1) < -cut) fail(ErrorCode::NotPSD, "matrix is not PSD");
  const double tr = sigma.trace();
  return {tr / e.values(0), tr * tr / sigma.dense().squaredNorm()};
}

NormRanks norm_effective_ranks(const SymMatrix& sigma, const NormSpec& norm, int mc_samples,
                               std::uint64_t seed) {
  if (mc_samples < 2) fail(ErrorCode::InvalidData, "need at least two Monte Carlo samples");
  if (norm.kind == NormSpec::Kind::Custom &&
      (!norm.dual_norm || !norm.selector || !norm.unit_ball_sup)) {
    fail(ErrorCode::MissingSelector, "custom norm needs dual norm, selector and unit-ball sup");
  }
  const Index p = sigma.dim();
  const Matrix& s = sigma.dense();
  const Matrix root = psd_sqrt(sigma).dense();

  double sup = 0.0;
  switch (norm.kind) {
    case NormSpec::Kind::L2: sup = std::sqrt(std::max(0.0, sym_eig(sigma).values(0))); break;
    case NormSpec::Kind::L1: sup = std::sqrt(std::max(0.0, s.diagonal().maxCoeff())); break;
    case NormSpec::Kind::Custom: sup = norm.unit_ball_sup(sigma); break;
  }
  if (!(sup > 0)) fail(ErrorCode::ZeroMatrix, "norm ranks of a zero matrix");

  Engine engine = make_engine(seed);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int t = 0; t < mc_samples; ++t) {
    const Vector u = root * standard_normal(p, engine);
    double dual = 0.0;
    double vnorm = 0.0;
    switch (norm.kind) {
      case NormSpec::Kind::L2: {
        dual = u.norm();
        if (dual > 0) vnorm = std::sqrt(u.dot(s * u)) / dual;
        break;
      }
      case NormSpec::Kind::L1: {
        Index arg = 0;
        dual = u.cwiseAbs().maxCoeff(&arg);  // first maximal coordinate
        vnorm = std::sqrt(s(arg, arg));
        break;
      }
      case NormSpec::Kind::Custom: {
        dual = norm.dual_norm(u);
        const Vector v = norm.selector(u);
        vnorm = std::sqrt(std::max(0.0, v.dot(s * v)));
        break;
      }
    }
    sa += dual;
    sb += vnorm;
    saa += dual * dual;
    sbb += vnorm * vnorm;
    sab += dual * vnorm;
  }
  const double m = mc_samples;
  const double a = sa / m;
  const double b = sb / m;
  const double va = std::max(0.0, (saa - m * a * a) / (m - 1));
  const double vb = std::max(0.0, (sbb - m * b * b) / (m - 1));
  const double cab = (sab - m * a * b) / (m - 1);

  NormRanks out;
  out.mean_dual = a;
  out.stderr_dual = std::sqrt(va / m);
  out.r_norm = (a / sup) * (a / sup);
  out.stderr_r = 2.0 * a / (sup * sup) * out.stderr_dual;
  out.R_norm = (a / b) * (a / b);
  const double ga = 2.0 * a / (b * b);
  const double gb = -2.0 * a * a / (b * b * b);
  out.stderr_R = std::sqrt(std::max(0.0, (ga * ga * va + gb * gb * vb + 2 * ga * gb * cab) / m));
  return out;
}

double expected_gaussian_norm(const Vector& eigenvalues) {
  const double tr = eigenvalues.sum();
  if (!(tr > 0)) return 0.0;
  const Vector mu = eigenvalues / tr;
  // E sqrt(Q) = sqrt(tr / pi) * int_0^inf (1 - prod_i (1 + 2 s^2 mu_i)^{-1/2}) / s^2 ds.
  auto f = [&mu](double s) {
    if (s == 0.0) return 1.0;
    const double s2 = s * s;
    if (!std::isfinite(s2)) return 0.0;
    if (s2 < 1e-16) return 1.0;  // limit sum(mu) = 1
    double log_prod = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
      if (mu(i) > 0.0) log_prod -= 0.5 * std::log1p(2.0 * s2 * mu(i));
    }
    return -std::expm1(log_prod) / s2;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double integral = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(),
                                               1e-12);
  return std::sqrt(tr / boost::math::constants::pi<double>()) * integral;
}

SpectralQuantities spectral_quantities(const Vector& u_eigs, const Vector& z_eigs,
                                       const Vector& omega_eig, double theta0_norm,
                                       double sigma2) {
  const Index p = u_eigs.size();
  if (z_eigs.size() != p || omega_eig.size() != p) {
    fail(ErrorCode::DimensionMismatch, "spectral quantities need equal lengths");
  }
  SpectralQuantities q;
  const EffectiveRanks rk = effective_ranks_from_spectrum(z_eigs);
  q.tr_xi = z_eigs.sum();
  q.op_xi = z_eigs.maxCoeff();
  q.tr_xi2 = z_eigs.squaredNorm();
  q.r_xi = rk.r;
  q.R_xi = rk.R;
  q.rank_u = numerical_rank(u_eigs);
  double pinv2 = 0, xi_pinv2 = 0, quad = 0;
  for (Index i = 0; i < p; ++i) {
    q.tr_u_xi += u_eigs(i) * z_eigs(i);
    if (u_eigs(i) > 0) {
      const double w = omega_eig(i) / u_eigs(i);
      pinv2 += w * w;
      xi_pinv2 += z_eigs(i) * w * w;
      quad += omega_eig(i) * w;
    }
  }
  q.pinv_omega_norm = std::sqrt(pinv2);
  q.xi_half_pinv_omega_norm = std::sqrt(xi_pinv2);
  q.mixed = xi_pinv2;
  q.theta0_norm = theta0_norm;
  q.sigma2 = sigma2;
  q.sigma_tilde2 = sigma2 - quad;
  q.orthogonal = q.tr_u_xi == 0.0;
  q.z_eigs = z_eigs;
  return q;
}

SpectralQuantities spectral_quantities(const EndogeneityModel& model) {
  return spectral_quantities(model.cov.u_eigs, model.cov.z_eigs, model.omega_eig,
                             model.theta0.norm(), model.sigma2);
}

double sigma_tilde2(const EndogeneityModel& model) {
  const Vector w = model.cov.basis.to_eigen(model.omega);
  double quad = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (model.cov.u_eigs(i) > 0) quad += w(i) * w(i) / model.cov.u_eigs(i);
  }
  const double value = model.sigma2 - quad;
  if (value < -1e-10) {
    fail(ErrorCode::ModelInconsistent, "omega^T Sigma_u^+ omega exceeds sigma^2");
  }
  return value;
}

namespace {

double log_inv(double delta) {
  if (!(delta > 0 && delta < 1)) fail(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
  return std::log(1.0 / delta);
}

}  // namespace

double eta_delta(const SpectralQuantities& q, Index n, double delta) {
  const double nn = static_cast<double>(n);
  return std::sqrt(log_inv(delta)) *
         (1.0 / std::sqrt(q.r_xi) + std::sqrt(static_cast<double>(q.rank_u) / nn) + nn / q.R_xi);
}

double eta_delta(const EndogeneityModel& model, Index n, double delta) {
  return eta_delta(spectral_quantities(model), n, delta);
}

double literal_norm_constant(SplitKind kind) {
  return kind == SplitKind::Orthogonal ? 56.0 : 160.0;
}

BoundReport rmse_upper_bound(const SpectralQuantities& q, Index n, double delta, double B,
                             double c1) {
  if (B < q.theta0_norm) fail(ErrorCode::InvalidRadius, "B must be at least ||theta0||");
  const double nn = static_cast<double>(n);
  BoundReport r;
  r.delta = delta;
  r.gamma_delta = c1 * std::sqrt(log_inv(delta)) *
                  (1.0 / std::sqrt(q.r_xi) + std::sqrt(static_cast<double>(q.rank_u) / nn));
  r.gamma_feasible = r.gamma_delta <= 1.0;
  r.eta_delta = eta_delta(q, n, delta);
  r.rmse_bound = (1.0 + r.gamma_delta) * (B * B * q.tr_xi / nn - q.sigma_tilde2);
  const double t = (q.pinv_omega_norm + q.theta0_norm) * std::sqrt(q.tr_xi / nn);
  const double sigma_tilde = std::sqrt(std::max(0.0, q.sigma_tilde2));
  r.rmse_principal = (1.0 + r.eta_delta) * std::max(1.0, sigma_tilde) * (t + t * t);
  r.constants_used = {{"C1", c1}, {"B", B}};
  return r;
}

BoundReport rmse_upper_bound(const EndogeneityModel& model, Index n, double delta, double B,
                             double c1) {
  return rmse_upper_bound(spectral_quantities(model), n, delta, B, c1);
}

BoundReport norm_upper_bound(const SpectralQuantities& q, Index n, double delta, double c2,
                             double c_eta) {
  if (!(q.sigma_tilde2 > 0)) fail(ErrorCode::DegenerateNoise, "norm bound needs sigma_tilde > 0");
  const double nn = static_cast<double>(n);
  const double li = log_inv(delta);
  const double sigma_tilde = std::sqrt(q.sigma_tilde2);
  BoundReport r;
  r.delta = delta;
  r.eta_delta = eta_delta(q, n, delta);
  r.eta1 = c_eta * std::sqrt(nn / q.R_xi) * q.xi_half_pinv_omega_norm;
  const double gauss = q.pinv_omega_norm > 0 ? expected_gaussian_norm(q.z_eigs) : 0.0;
  const double inflate = 1.0 + std::sqrt(2.0 * std::log(8.0 / delta) / q.r_xi);
  r.eta2 = c_eta * std::sqrt(inflate) *
           std::sqrt(gauss * gauss / nn * q.pinv_omega_norm * q.pinv_omega_norm +
                     q.xi_half_pinv_omega_norm * q.xi_half_pinv_omega_norm);
  const double endo = q.pinv_omega_norm / sigma_tilde * std::sqrt(q.tr_xi / nn);
  r.epsilon = c2 * std::sqrt(li) *
              (std::sqrt(static_cast<double>(q.rank_u) / nn) +
               (1.0 + q.tr_u_xi / q.tr_xi2) * (nn / q.R_xi) + endo);
  r.epsilon_feasible = r.epsilon <= 1.0;
  r.rank_condition = q.R_xi >= li * li;
  r.norm_bound = q.theta0_norm + q.pinv_omega_norm +
                 std::sqrt(1.0 + r.epsilon) * (2.0 * r.eta1 + sigma_tilde + r.eta2) *
                     std::sqrt(nn / q.tr_xi);
  r.constants_used = {{"C2", c2}, {"C_eta", c_eta}, {"E_gauss_norm", gauss}};
  return r;
}

BoundReport norm_upper_bound(const EndogeneityModel& model, Index n, double delta, double c2,
                             double c_eta) {
  return norm_upper_bound(spectral_quantities(model), n, delta, c2, c_eta);
}

std::vector<std::string> condition_sequence_names(ConditionMode mode) {
  switch (mode) {
    case ConditionMode::Orthogonal: return {"rank_ratio", "eff_dim", "aliasing", "endo"};
    case ConditionMode::NonOrthogonal:
      return {"rank_ratio", "eff_dim", "aliasing", "endo_nonortho", "cross_rank", "mixed"};
    case ConditionMode::Exogenous: return {"rank_ratio", "eff_dim", "aliasing", "cross_rank"};
  }
  return {};
}

bool ConditionReport::all_decreasing() const {
  for (const auto& name : names) {
    if (!sequences.at(name).decreasing) return false;
  }
  return true;
}

namespace {

double sequence_value(const std::string& name, const SpectralQuantities& q, double n) {
  const double root = std::sqrt(q.tr_xi / n);
  if (name == "rank_ratio") return static_cast<double>(q.rank_u) / n;
  if (name == "eff_dim") return n / q.R_xi;
  if (name == "aliasing") return q.theta0_norm * root;
  if (name == "endo") return q.pinv_omega_norm * root;
  if (name == "endo_nonortho") {
    return q.pinv_omega_norm == 0.0 ? 0.0 : q.pinv_omega_norm / std::sqrt(q.sigma_tilde2) * root;
  }
  if (name == "cross_rank") return n / q.R_xi * q.tr_u_xi / q.tr_xi2;
  if (name == "mixed") return q.mixed;
  fail(ErrorCode::InvalidConfig, "unknown sequence " + name);
}

}  // namespace

ConditionReport evaluate_conditions(const ModelFamily& family, const std::vector<Index>& n_grid,
                                    ConditionMode mode) {
  if (n_grid.size() < 3) fail(ErrorCode::InvalidConfig, "condition grid needs >= 3 points");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] < n_grid[i - 1]) fail(ErrorCode::InvalidConfig, "grid must be nondecreasing");
  }
  ConditionReport report;
  report.n_grid = n_grid;
  report.mode = mode;
  report.names = condition_sequence_names(mode);
  for (const auto& name : report.names) report.sequences[name];
  for (Index n : n_grid) {
    const SpectralQuantities q = family(n);
    for (const auto& name : report.names) {
      report.sequences[name].values.push_back(sequence_value(name, q, static_cast<double>(n)));
    }
  }
  for (auto& [name, seq] : report.sequences) {
    for (std::size_t i = 1; i < seq.values.size(); ++i) {
      if (!(seq.values[i] < seq.values[i - 1] + 1e-12)) seq.decreasing = false;
    }
    seq.final_value = seq.values.back();
  }
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_condition_report_csv(const ConditionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  out << 'n';
  for (const auto& name : report.names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < report.n_grid.size(); ++i) {
    out << report.n_grid[i];
    for (const auto& name : report.names) out << ',' << fmt(report.sequences.at(name).values[i]);
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

void write_bound_reports_csv(const std::vector<BoundReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  out << "delta,gamma_delta,eta_delta,epsilon,eta1,eta2,rmse_bound,rmse_principal,norm_bound,"
         "gamma_feasible,epsilon_feasible,rank_condition\n";
  for (const auto& r : reports) {
    out << fmt(r.delta) << ',' << fmt(r.gamma_delta) << ',' << fmt(r.eta_delta) << ','
        << fmt(r.epsilon) << ',' << fmt(r.eta1) << ',' << fmt(r.eta2) << ',' << fmt(r.rmse_bound)
        << ',' << fmt(r.rmse_principal) << ',' << fmt(r.norm_bound) << ',' << r.gamma_feasible
        << ',' << r.epsilon_feasible << ',' << r.rank_condition << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace ridgeless
