#include "ridgeless/cgmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "ridgeless/error.hpp"
#include "ridgeless/parallel.hpp"
#include "ridgeless/rng.hpp"

namespace ridgeless {

TrustRegionResult maximize_quadratic_on_ball(const SymMatrix& A, const Vector& g,
                                             double radius) {
  const Index m = A.dim();
  if (g.size() != m) fail(ErrorCode::DimensionMismatch, "trust region sizes differ");
  if (!(radius >= 0)) fail(ErrorCode::InvalidRadius, "negative trust region radius");
  TrustRegionResult out;
  out.y = Vector::Zero(m);
  if (m == 0 || radius == 0.0) return out;

  const EigenDecomp e = sym_eig(A);
  const Vector gt = e.vectors.transpose() * g;
  const double top = e.values(0);
  const double gnorm = g.norm();
  const double scale = std::max(e.values.cwiseAbs().maxCoeff(), 1e-300);
  const double tie = 1e-12 * scale;

  auto phi = [&](double mu) {
    double s = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double d = mu - e.values(i);
      s += gt(i) * gt(i) / (d * d);
    }
    return s;
  };

  Vector yt(m);
  double mu = 0.0;
  if (top < 0 && phi(0.0) <= radius * radius) {
    // Interior maximizer of a concave quadratic.
    for (Index i = 0; i < m; ++i) yt(i) = -gt(i) / e.values(i);
  } else {
    const double lo = std::max(top, 0.0);
    double lead_mass = 0.0;  // |g| along the top eigenspace
    double rest = 0.0;       // ||y||^2 at mu = lo from the other directions
    for (Index i = 0; i < m; ++i) {
      if (e.values(i) >= lo - tie && lo == top) {
        lead_mass += gt(i) * gt(i);
      } else {
        const double d = lo - e.values(i);
        rest += gt(i) * gt(i) / (d * d);
      }
    }
    const bool hard = lo == top && std::sqrt(lead_mass) <= 1e-14 * std::max(gnorm, 1e-300) &&
                      rest <= radius * radius;
    if (hard) {
      mu = top;
      for (Index i = 0; i < m; ++i) {
        yt(i) = e.values(i) >= top - tie ? 0.0 : gt(i) / (top - e.values(i));
      }
      yt(0) = std::sqrt(std::max(0.0, radius * radius - yt.squaredNorm()));
      out.hard_case = true;
    } else {
      auto f = [&](double x) {
        if (x <= lo) return 1.0 / radius;
        return 1.0 / radius - 1.0 / std::sqrt(phi(x));
      };
      double hi = lo + gnorm / radius;
      while (f(hi) > 0) hi = lo + 2.0 * (hi - lo) + 1e-300;
      boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
      std::uintmax_t iters = 200;
      const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
      mu = 0.5 * (bracket.first + bracket.second);
      if (mu <= lo) mu = bracket.second;
      for (Index i = 0; i < m; ++i) yt(i) = gt(i) / (mu - e.values(i));
      const double len = yt.norm();
      if (len > 0) yt *= radius / len;
    }
  }
  out.y = e.vectors * yt;
  out.multiplier = mu;
  out.value = out.y.dot(A.dense() * out.y) + 2.0 * g.dot(out.y);
  const Vector stat = mu * out.y - A.dense() * out.y - g;
  out.residual = stat.norm() / std::max(1.0, gnorm + std::abs(mu) * out.y.norm());
  return out;
}

PoSolution solve_po_design(const Matrix& M, const Vector& xi, const SymMatrix& xi_z,
                           const Vector& theta0, double radius) {
  const Index p = M.cols();
  if (M.rows() != xi.size() || xi_z.dim() != p || theta0.size() != p) {
    fail(ErrorCode::DimensionMismatch, "primary problem sizes differ");
  }
  if (radius < theta0.norm()) fail(ErrorCode::InvalidRadius, "B must be at least ||theta0||");
  const Vector x0 = M.completeOrthogonalDecomposition().solve(xi);
  const double lhs = (M * x0 - xi).norm();
  if (lhs > 1e-9 * (xi.norm() + M.norm() * x0.norm() + 1e-300)) {
    fail(ErrorCode::NoFeasiblePoint, "affine constraint is inconsistent");
  }
  const Matrix N = null_space_basis(M);
  const Vector d = x0 + theta0;
  const Vector nd = N.transpose() * d;
  // Point of the affine set closest to the ball centre -theta0.
  const Vector a = x0 - N * nd;
  const double off2 = std::max(0.0, d.squaredNorm() - nd.squaredNorm());
  double r2 = radius * radius - off2;
  if (r2 < -1e-12 * radius * radius) {
    fail(ErrorCode::NoFeasiblePoint, "affine set does not meet the ball");
  }
  r2 = std::max(r2, 0.0);

  const Matrix& Xi = xi_z.dense();
  PoSolution out;
  if (N.cols() == 0) {
    out.theta_prime = a;
    out.value = a.dot(Xi * a);
    return out;
  }
  const SymMatrix A(N.transpose() * Xi * N);
  const Vector g = N.transpose() * (Xi * a);
  const TrustRegionResult tr = maximize_quadratic_on_ball(A, g, std::sqrt(r2));
  out.theta_prime = a + N * tr.y;
  out.value = std::max(0.0, out.theta_prime.dot(Xi * out.theta_prime));
  out.multiplier = tr.multiplier;
  out.stationarity_residual = tr.residual;
  return out;
}

PoSolution solve_po(const PoInstance& inst) {
  const Index p = inst.theta0.size();
  if (inst.W1.cols() != p || inst.W2.cols() != p || inst.W1.rows() != inst.W2.rows()) {
    fail(ErrorCode::DimensionMismatch, "factor matrices have inconsistent sizes");
  }
  const Matrix M = inst.W1 * psd_sqrt(inst.xi_z).dense() + inst.W2 * psd_sqrt(inst.sigma_u).dense();
  return solve_po_design(M, inst.xi, inst.xi_z, inst.theta0, inst.radius);
}

namespace {

struct AoProblem {
  Matrix K;       // W2 Sigma_u^{1/2}
  Matrix Sz;      // Xi_z^{1/2}
  Matrix Xi;      // Xi_z
  Vector xi;
  Vector G;
  Vector SzH;     // Xi_z^{1/2} H
  Vector center;  // -theta0
  double radius;

  double constraint(const Vector& t) const {
    const double a = (Sz * t).norm();
    return (xi - K * t - G * a).norm() - t.dot(SzH);
  }

  Vector constraint_grad(const Vector& t) const {
    const Vector s = Sz * t;
    const double a = s.norm();
    const Vector r = xi - K * t - G * a;
    const double rn = r.norm();
    Vector grad = -SzH;
    if (rn > 0) {
      grad -= K.transpose() * r / rn;
      if (a > 0) grad -= (G.dot(r) / rn) * (Sz * s) / a;
    }
    return grad;
  }

  double objective(const Vector& t) const { return t.dot(Xi * t); }

  Vector project(const Vector& t) const {
    const Vector d = t - center;
    const double len = d.norm();
    return len <= radius ? t : Vector(center + d * (radius / len));
  }
};

// Pulls t toward {f <= 0} with projected Newton steps on f.
bool restore(const AoProblem& pr, Vector& t, int steps) {
  double f = pr.constraint(t);
  for (int k = 0; k < steps && f > 0; ++k) {
    const Vector g = pr.constraint_grad(t);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) return false;
    t = pr.project(t - (f / g2) * 1.0001 * g);
    f = pr.constraint(t);
  }
  return f <= 0;
}

bool find_feasible(const AoProblem& pr, Vector& t, const AoOptions& opt) {
  double f = pr.constraint(t);
  double step = pr.radius;
  for (int it = 0; it < opt.iterations && f > 0; ++it) {
    const Vector g = pr.constraint_grad(t);
    const double gn = g.norm();
    if (gn == 0.0) return false;
    bool moved = false;
    for (double s = std::min(2.0 * step, pr.radius); s > 1e-12 * pr.radius; s *= opt.shrink) {
      Vector cand = pr.project(t - (s / gn) * g);
      const double fc = pr.constraint(cand);
      if (fc < f) {
        t = std::move(cand);
        f = fc;
        step = s;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return f <= 0 || restore(pr, t, 8);
}

void ascend(const AoProblem& pr, Vector& t, const AoOptions& opt) {
  double obj = pr.objective(t);
  double step = pr.radius;
  for (int it = 0; it < opt.iterations; ++it) {
    Vector d = 2.0 * (pr.Xi * t);
    const double f = pr.constraint(t);
    if (f > -1e-9 * (1.0 + pr.xi.norm())) {
      const Vector gf = pr.constraint_grad(t);
      const double along = d.dot(gf);
      const double g2 = gf.squaredNorm();
      if (along > 0 && g2 > 0) d -= (along / g2) * gf;
    }
    double dn = d.norm();
    if (dn == 0.0) {
      d = 2.0 * (pr.Xi * t);
      dn = d.norm();
      if (dn == 0.0) break;
    }
    bool moved = false;
    for (double s = std::min(2.0 * step, pr.radius); s > 1e-10 * pr.radius; s *= opt.shrink) {
      Vector cand = pr.project(t + (s / dn) * d);
      if (!restore(pr, cand, 8)) continue;
      const double oc = pr.objective(cand);
      if (oc > obj * (1.0 + 1e-14) + 1e-300) {
        t = std::move(cand);
        obj = oc;
        step = s;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
}

AoProblem make_problem(const Matrix& W2, const Vector& xi, const Vector& G, const Vector& H,
                       const SymMatrix& xi_z, const SymMatrix& sigma_u, const Vector& theta0,
                       double radius) {
  const Index p = theta0.size();
  if (W2.cols() != p || W2.rows() != xi.size() || G.size() != xi.size() || H.size() != p ||
      xi_z.dim() != p || sigma_u.dim() != p) {
    fail(ErrorCode::DimensionMismatch, "auxiliary problem sizes differ");
  }
  AoProblem pr;
  pr.Sz = psd_sqrt(xi_z).dense();
  pr.K = W2 * psd_sqrt(sigma_u).dense();
  pr.Xi = xi_z.dense();
  pr.xi = xi;
  pr.G = G;
  pr.SzH = pr.Sz * H;
  pr.center = -theta0;
  pr.radius = radius;
  return pr;
}

}  // namespace

double ao_constraint(const Matrix& W2, const Vector& xi, const Vector& G, const Vector& H,
                     const SymMatrix& xi_z, const SymMatrix& sigma_u, const Vector& t) {
  return make_problem(W2, xi, G, H, xi_z, sigma_u, Vector::Zero(t.size()), 1.0).constraint(t);
}

AoSolution solve_ao(const Matrix& W2, const Vector& xi, const Vector& G, const Vector& H,
                    const SymMatrix& xi_z, const SymMatrix& sigma_u, const Vector& theta0,
                    double radius, const AoOptions& options) {
  if (radius < theta0.norm()) fail(ErrorCode::InvalidRadius, "B must be at least ||theta0||");
  const AoProblem pr = make_problem(W2, xi, G, H, xi_z, sigma_u, theta0, radius);
  const Index p = theta0.size();
  AoSolution best;
  best.theta_prime = Vector::Zero(p);

  auto consider = [&](const Vector& t) {
    if (pr.constraint(t) > 0 || (t - pr.center).norm() > radius) return;
    ++best.feasible_starts;
    const double v = pr.objective(t);
    if (!best.feasible || v > best.value) {
      best.feasible = true;
      best.value = v;
      best.theta_prime = t;
    }
  };

  // theta1 = 0 candidate: least-squares fit of theta2 alone.
  {
    Vector t = pr.project(pr.K.completeOrthogonalDecomposition().solve(xi));
    if (pr.constraint(t) <= 0) {
      consider(t);
      ascend(pr, t, options);
      consider(t);
    }
  }
  for (int s = 0; s < options.starts; ++s) {
    Engine engine = make_engine(derive_seed(options.seed, static_cast<std::uint64_t>(s)));
    Vector dir = standard_normal(p, engine);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double len = radius * std::pow(unif(engine), 1.0 / static_cast<double>(p));
    Vector t = pr.center + dir.normalized() * len;
    if (!find_feasible(pr, t, options)) continue;
    ascend(pr, t, options);
    consider(t);
  }
  if (!best.feasible) best.value = 0.0;
  return best;
}

CgmtSlice default_cgmt_slice(Index p) {
  if (p < 2) fail(ErrorCode::InvalidDimension, "slice needs p >= 2");
  SpectrumProfile profile{LogPoly{300.0, 2.0, std::exp(1.0) / 2.0},
                          {DimensionRule::Kind::Fixed, static_cast<double>(p)}};
  const Spectrum sp = spectrum(profile, 1);
  CovarianceModel cov = split_orthogonal(sp.eigenvalues, Basis::indicator_rotation(p), p / 2);
  Vector theta0(p), rho(p);
  for (Index i = 0; i < p; ++i) {
    theta0(i) = 20.0 / std::sqrt(static_cast<double>(i + 1));
    rho(i) = 2.0 / static_cast<double>(i + 1);
  }
  CgmtSlice slice;
  slice.model = assemble_model(std::move(cov), theta0, rho);
  slice.radius = 2.0 * theta0.norm();
  return slice;
}

TailReport tail_dominance_check(const CgmtSlice& slice, Index n, const TailOptions& options) {
  if (options.reps < 1) fail(ErrorCode::InvalidConfig, "need at least one repetition");
  const EndogeneityModel& model = slice.model;
  const Index p = model.dim();
  const SymMatrix xi_z = model.cov.xi_z();
  const SymMatrix sigma_u = model.cov.sigma_u();
  const Matrix Sz = psd_sqrt(xi_z).dense();
  const Matrix Su = psd_sqrt(sigma_u).dense();
  const double st = std::sqrt(model.sigma_tilde2);
  const double minus_inf = -std::numeric_limits<double>::infinity();

  TailReport rep;
  rep.n = n;
  rep.p = p;
  rep.reps = options.reps;
  rep.phi_po.assign(static_cast<std::size_t>(options.reps), minus_inf);
  rep.phi_ao.assign(static_cast<std::size_t>(options.reps), minus_inf);

  parallel_for(options.reps, options.threads, [&](long r) {
    const std::uint64_t seed = repetition_seed(options.seed, static_cast<std::uint64_t>(r));
    Engine ew = make_engine(derive_seed(seed, 1));
    Engine eg = make_engine(derive_seed(seed, 2));
    const Matrix W1 = standard_normal(n, p, ew);
    const Matrix W2 = standard_normal(n, p, ew);
    const Vector xi = W2 * model.rho + st * standard_normal(n, ew);
    const Vector G = standard_normal(n, eg);
    const Vector H = standard_normal(p, eg);
    try {
      rep.phi_po[static_cast<std::size_t>(r)] =
          solve_po_design(W1 * Sz + W2 * Su, xi, xi_z, model.theta0, slice.radius).value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoFeasiblePoint) throw;
    }
    AoOptions ao = options.ao;
    ao.seed = derive_seed(seed, 3);
    const AoSolution sol = solve_ao(W2, xi, G, H, xi_z, sigma_u, model.theta0, slice.radius, ao);
    if (sol.feasible) rep.phi_ao[static_cast<std::size_t>(r)] = sol.value;
  });

  std::vector<double> pooled;
  for (std::size_t i = 0; i < rep.phi_po.size(); ++i) {
    if (std::isfinite(rep.phi_po[i])) {
      ++rep.po_feasible;
      pooled.push_back(rep.phi_po[i]);
    }
    if (std::isfinite(rep.phi_ao[i])) {
      ++rep.ao_feasible;
      pooled.push_back(rep.phi_ao[i]);
    }
  }
  rep.c_grid = options.c_grid;
  if (rep.c_grid.empty() && !pooled.empty()) {
    std::sort(pooled.begin(), pooled.end());
    const int k = std::max(1, options.c_points);
    for (int i = 0; i < k; ++i) {
      const double level = k == 1 ? 0.5 : 0.025 + 0.95 * i / (k - 1);
      const auto idx = static_cast<std::size_t>(level * static_cast<double>(pooled.size() - 1));
      rep.c_grid.push_back(pooled[idx]);
    }
  }
  const double m = static_cast<double>(options.reps);
  for (double c : rep.c_grid) {
    const double cnt_po = static_cast<double>(
        std::count_if(rep.phi_po.begin(), rep.phi_po.end(), [c](double v) { return v > c; }));
    const double cnt_ao = static_cast<double>(
        std::count_if(rep.phi_ao.begin(), rep.phi_ao.end(), [c](double v) { return v >= c; }));
    const double ppo = cnt_po / m;
    const double pao = cnt_ao / m;
    const double se_po = std::sqrt(ppo * (1 - ppo) / m);
    const double se_ao = std::sqrt(pao * (1 - pao) / m);
    rep.p_phi_gt.push_back(ppo);
    rep.p_phi_ao_ge.push_back(pao);
    rep.stderr_po.push_back(se_po);
    rep.stderr_ao.push_back(se_ao);
    const bool bad = ppo > 2.0 * pao + 3.0 * (se_po + 2.0 * se_ao);
    rep.violated.push_back(bad);
    if (bad) ++rep.violations;
  }
  return rep;
}

void write_tail_report_csv(const TailReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path);
  out << "c,p_po_gt,p_ao_ge,stderr_po,stderr_ao,violation\n";
  char buf[160];
  for (std::size_t i = 0; i < report.c_grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", report.c_grid[i],
                  report.p_phi_gt[i], report.p_phi_ao_ge[i], report.stderr_po[i],
                  report.stderr_ao[i], report.violated[i] ? 1 : 0);
    out << buf;
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace ridgeless
