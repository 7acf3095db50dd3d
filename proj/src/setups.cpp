#include "ridgeless/setups.hpp"

#include <cmath>

#include "ridgeless/error.hpp"

namespace ridgeless {

using nlohmann::json;

const double kSetupLogFactor = std::exp(1.0) / 2.0;

Vector VectorRule::evaluate(Index p, Index n, Index k_star) const {
  Vector v = Vector::Zero(p);
  Index upto = p;
  if (support == Support::FractionOfN) {
    upto = std::min<Index>(p, static_cast<Index>(std::llround(fraction * static_cast<double>(n))));
  } else if (support == Support::UpToTruncation) {
    upto = std::min(p, k_star);
  } else if (support == Support::Stride) {
    upto = std::min(p, limit);
  }
  for (Index i = 1; i <= upto; ++i) {
    if (support == Support::Stride && i % stride != residue % stride) continue;
    const double x = static_cast<double>(i);
    double value = 0.0;
    switch (kind) {
      case Kind::Zero: value = 0.0; break;
      case Kind::InverseSqrt: value = scale / std::sqrt(x); break;
      case Kind::Harmonic: value = scale / x; break;
      case Kind::ExpDecay: value = scale * std::exp(-x / rate); break;
      case Kind::LogHarmonic: value = scale / x * std::pow(std::log(x + 1.0), -beta); break;
    }
    v(i - 1) = value;
  }
  return v;
}

namespace {

VectorRule rule(VectorRule::Kind kind, double scale) {
  VectorRule r;
  r.kind = kind;
  r.scale = scale;
  return r;
}

SetupSpec setup_i() {
  SetupSpec s;
  s.id = "i";
  s.profile = {LogPoly{300.0, 2.0, kSetupLogFactor}, {DimensionRule::Kind::Linear, 5.0}};
  s.theta0 = rule(VectorRule::Kind::InverseSqrt, 20.0);
  s.target = SetupSpec::Target::Rho;
  s.correlation = rule(VectorRule::Kind::Harmonic, 2.0);
  return s;
}

SetupSpec setup_ii() {
  SetupSpec s;
  s.id = "ii";
  s.profile = {ExpPlusNoise{2.0, 10.0, {NoiseFloor::Kind::ExpSqrt, 0.0}},
               {DimensionRule::Kind::Power, 1.5}};
  s.theta0 = rule(VectorRule::Kind::InverseSqrt, 20.0);
  s.correlation = rule(VectorRule::Kind::ExpDecay, 3.0);
  s.correlation.rate = 4.0;
  return s;
}

SetupSpec nonorthogonal(SetupSpec s, const std::string& id) {
  s.id = id;
  s.split = SplitKind::NonOrthogonal;
  s.alpha = 1.01;
  return s;
}

SetupSpec sparse(SetupSpec s, const std::string& id) {
  s.id = id;
  s.theta0.support = VectorRule::Support::Stride;
  s.theta0.limit = 100;
  s.theta0.stride = 5;
  s.theta0.residue = 1;
  return s;
}

SetupSpec setup_vii() {
  SetupSpec s = nonorthogonal(setup_i(), "vii");
  s.rotation = SetupSpec::Rotation::Identity;
  s.target = SetupSpec::Target::Omega;
  s.correlation = rule(VectorRule::Kind::Harmonic, 2.0);
  s.correlation.support = VectorRule::Support::FractionOfN;
  s.correlation.fraction = 0.1;
  return s;
}

SetupSpec example1() {
  SetupSpec s = setup_i();
  s.id = "example1";
  s.target = SetupSpec::Target::Omega;
  s.correlation = rule(VectorRule::Kind::LogHarmonic, 2.0);
  s.correlation.beta = 2.0;
  s.correlation.support = VectorRule::Support::UpToTruncation;
  return s;
}

SetupSpec example2() {
  SetupSpec s = setup_ii();
  s.id = "example2";
  s.target = SetupSpec::Target::Omega;
  s.correlation = rule(VectorRule::Kind::ExpDecay, 3.0);
  s.correlation.rate = 2.0;
  s.correlation.support = VectorRule::Support::UpToTruncation;
  return s;
}

SetupSpec identity_family() {
  SetupSpec s;
  s.id = "identity";
  s.profile = {Explicit{std::vector<double>(50, 1.0)}, {DimensionRule::Kind::Fixed, 50.0}};
  s.truncation_level = 0;
  s.rotation = SetupSpec::Rotation::Identity;
  s.theta0 = rule(VectorRule::Kind::InverseSqrt, 20.0);
  s.correlation = rule(VectorRule::Kind::Zero, 0.0);
  return s;
}

}  // namespace

std::vector<std::string> preset_ids() {
  return {"i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix",
          "example1", "example2", "example3", "identity"};
}

SetupSpec setup_preset(const std::string& id) {
  if (id == "i") return setup_i();
  if (id == "ii") return setup_ii();
  if (id == "iii") return nonorthogonal(setup_i(), "iii");
  if (id == "iv") return nonorthogonal(setup_ii(), "iv");
  if (id == "v") return sparse(setup_i(), "v");
  if (id == "vi") return sparse(nonorthogonal(setup_i(), "vi"), "vi");
  if (id == "vii") return setup_vii();
  if (id == "viii") {
    SetupSpec s = setup_vii();
    s.id = "viii";
    s.theta0.support = VectorRule::Support::FractionOfN;
    s.theta0.fraction = 0.8;
    return s;
  }
  if (id == "ix") {
    SetupSpec s = setup_vii();
    s.id = "ix";
    s.relocate_endogenous = true;
    return s;
  }
  if (id == "example1") return example1();
  if (id == "example2") return example2();
  if (id == "example3") return nonorthogonal(example1(), "example3");
  if (id == "identity") return identity_family();
  fail(ErrorCode::InvalidConfig, "unknown setup id '" + id + "'");
}

namespace {

struct Pieces {
  Vector eigs;
  Index k_star = 0;
  Index p = 0;
};

Pieces spectral_pieces(const SetupSpec& spec, Index n) {
  Pieces out;
  const Spectrum sp = spectrum(spec.profile, n);
  out.p = sp.p;
  out.eigs = sp.eigenvalues;
  out.k_star = spec.truncation_level ? *spec.truncation_level : truncation_level(sp.eigenvalues, n);
  return out;
}

CovarianceModel make_cov(const SetupSpec& spec, const Pieces& pc, Basis basis, Index n) {
  if (spec.split == SplitKind::Orthogonal) return split_orthogonal(pc.eigs, std::move(basis), pc.k_star);
  return split_nonorthogonal(pc.eigs, std::move(basis), pc.k_star, spec.alpha, n);
}

Basis make_basis(const SetupSpec& spec, const Pieces& pc, Index n) {
  if (spec.relocate_endogenous) {
    const Index k = spec.correlation.support == VectorRule::Support::FractionOfN
                        ? static_cast<Index>(std::llround(spec.correlation.fraction * static_cast<double>(n)))
                        : pc.k_star;
    const Index block = k / 5;
    if (block > pc.k_star || pc.k_star + block > pc.p) {
      fail(ErrorCode::InvalidConfig, "relocation blocks do not fit the dimension");
    }
    std::vector<Index> image(static_cast<std::size_t>(pc.p));
    for (Index j = 0; j < pc.p; ++j) image[static_cast<std::size_t>(j)] = j;
    for (Index j = 0; j < block; ++j) {
      std::swap(image[static_cast<std::size_t>(j)], image[static_cast<std::size_t>(pc.k_star + j)]);
    }
    return Basis::permutation(std::move(image));
  }
  if (spec.rotation == SetupSpec::Rotation::Identity) return Basis::identity(pc.p);
  return Basis::indicator_rotation(pc.p);
}

EndogeneityModel assemble(const SetupSpec& spec, const Pieces& pc, CovarianceModel cov, Index n,
                          const Vector& theta0) {
  const Vector corr = spec.correlation.evaluate(pc.p, n, pc.k_star);
  if (spec.target == SetupSpec::Target::Rho) {
    return assemble_model(std::move(cov), theta0, corr, spec.sigma);
  }
  const Vector omega = cov.basis.to_ambient(corr);
  return assemble_model_from_omega(std::move(cov), theta0, omega, spec.sigma);
}

}  // namespace

BuiltModel build_model(const SetupSpec& spec, Index n) {
  const Pieces pc = spectral_pieces(spec, n);
  CovarianceModel cov = make_cov(spec, pc, make_basis(spec, pc, n), n);
  BuiltModel out;
  out.model = assemble(spec, pc, std::move(cov), n, spec.theta0.evaluate(pc.p, n, pc.k_star));
  const Vector& w = out.model.omega;
  const double top = w.size() ? w.cwiseAbs().maxCoeff() : 0.0;
  if (top > 0) {
    for (Index j = 0; j < w.size(); ++j) {
      if (std::abs(w(j)) > 1e-12 * top) out.endogenous.push_back(j);
    }
  }
  return out;
}

SpectralQuantities build_spectral(const SetupSpec& spec, Index n) {
  const Pieces pc = spectral_pieces(spec, n);
  // Spectral summaries do not depend on the basis; theta0 enters through its norm only.
  CovarianceModel cov = make_cov(spec, pc, Basis::identity(pc.p), n);
  const EndogeneityModel m =
      assemble(spec, pc, std::move(cov), n, spec.theta0.evaluate(pc.p, n, pc.k_star));
  return spectral_quantities(m);
}

ConditionMode condition_mode(const SetupSpec& spec) {
  return spec.split == SplitKind::Orthogonal ? ConditionMode::Orthogonal
                                             : ConditionMode::NonOrthogonal;
}

namespace {

const char* kind_name(VectorRule::Kind k) {
  switch (k) {
    case VectorRule::Kind::Zero: return "zero";
    case VectorRule::Kind::InverseSqrt: return "inverse_sqrt";
    case VectorRule::Kind::Harmonic: return "harmonic";
    case VectorRule::Kind::ExpDecay: return "exp_decay";
    case VectorRule::Kind::LogHarmonic: return "log_harmonic";
  }
  return "zero";
}

VectorRule::Kind kind_from(const std::string& s) {
  if (s == "zero") return VectorRule::Kind::Zero;
  if (s == "inverse_sqrt") return VectorRule::Kind::InverseSqrt;
  if (s == "harmonic") return VectorRule::Kind::Harmonic;
  if (s == "exp_decay") return VectorRule::Kind::ExpDecay;
  if (s == "log_harmonic") return VectorRule::Kind::LogHarmonic;
  fail(ErrorCode::InvalidConfig, "unknown vector rule '" + s + "'");
}

json rule_to_json(const VectorRule& r) {
  json j{{"kind", kind_name(r.kind)}, {"scale", r.scale}};
  if (r.kind == VectorRule::Kind::ExpDecay) j["rate"] = r.rate;
  if (r.kind == VectorRule::Kind::LogHarmonic) j["beta"] = r.beta;
  switch (r.support) {
    case VectorRule::Support::All: j["support"] = {{"kind", "all"}}; break;
    case VectorRule::Support::FractionOfN:
      j["support"] = {{"kind", "fraction_of_n"}, {"fraction", r.fraction}};
      break;
    case VectorRule::Support::Stride:
      j["support"] = {{"kind", "stride"}, {"limit", r.limit}, {"stride", r.stride}, {"residue", r.residue}};
      break;
    case VectorRule::Support::UpToTruncation: j["support"] = {{"kind", "up_to_truncation"}}; break;
  }
  return j;
}

VectorRule rule_from_json(const json& j) {
  VectorRule r;
  r.kind = kind_from(j.at("kind").get<std::string>());
  r.scale = j.value("scale", 1.0);
  r.rate = j.value("rate", 1.0);
  r.beta = j.value("beta", 2.0);
  if (j.contains("support")) {
    const json& s = j.at("support");
    const std::string k = s.at("kind").get<std::string>();
    if (k == "all") {
      r.support = VectorRule::Support::All;
    } else if (k == "fraction_of_n") {
      r.support = VectorRule::Support::FractionOfN;
      r.fraction = s.at("fraction").get<double>();
    } else if (k == "stride") {
      r.support = VectorRule::Support::Stride;
      r.limit = s.at("limit").get<Index>();
      r.stride = s.at("stride").get<Index>();
      r.residue = s.at("residue").get<Index>();
      if (r.stride < 1) fail(ErrorCode::InvalidConfig, "stride must be positive");
    } else if (k == "up_to_truncation") {
      r.support = VectorRule::Support::UpToTruncation;
    } else {
      fail(ErrorCode::InvalidConfig, "unknown support '" + k + "'");
    }
  }
  return r;
}

json spectrum_to_json(const SpectrumProfile& prof) {
  json j;
  if (const auto* lp = std::get_if<LogPoly>(&prof.shape)) {
    j = {{"kind", "log_poly"}, {"scale", lp->scale}, {"beta", lp->beta}, {"log_factor", lp->log_factor}};
  } else if (const auto* ep = std::get_if<ExpPlusNoise>(&prof.shape)) {
    json floor;
    switch (ep->floor.kind) {
      case NoiseFloor::Kind::None: floor = {{"kind", "none"}}; break;
      case NoiseFloor::Kind::Constant: floor = {{"kind", "constant"}, {"value", ep->floor.value}}; break;
      case NoiseFloor::Kind::ExpSqrt: floor = {{"kind", "exp_sqrt"}}; break;
    }
    j = {{"kind", "exp_plus_noise"}, {"tau", ep->tau}, {"scale", ep->scale}, {"noise_floor", floor}};
  } else {
    j = {{"kind", "explicit"}, {"values", std::get<Explicit>(prof.shape).values}};
  }
  return j;
}

SpectrumProfile spectrum_from_json(const json& j, const json& dim) {
  SpectrumProfile prof;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "log_poly") {
    prof.shape = LogPoly{j.at("scale").get<double>(), j.at("beta").get<double>(),
                         j.value("log_factor", 1.0)};
  } else if (kind == "exp_plus_noise") {
    ExpPlusNoise ep{j.at("tau").get<double>(), j.at("scale").get<double>(), {}};
    if (j.contains("noise_floor")) {
      const std::string fk = j.at("noise_floor").at("kind").get<std::string>();
      if (fk == "none") {
        ep.floor.kind = NoiseFloor::Kind::None;
      } else if (fk == "constant") {
        ep.floor = {NoiseFloor::Kind::Constant, j.at("noise_floor").at("value").get<double>()};
      } else if (fk == "exp_sqrt") {
        ep.floor.kind = NoiseFloor::Kind::ExpSqrt;
      } else {
        fail(ErrorCode::InvalidConfig, "unknown noise floor '" + fk + "'");
      }
    }
    prof.shape = ep;
  } else if (kind == "explicit") {
    prof.shape = Explicit{j.at("values").get<std::vector<double>>()};
  } else {
    fail(ErrorCode::InvalidConfig, "unknown spectrum kind '" + kind + "'");
  }
  if (!dim.is_null()) {
    const std::string dk = dim.at("kind").get<std::string>();
    if (dk == "linear") {
      prof.p_rule.kind = DimensionRule::Kind::Linear;
    } else if (dk == "power") {
      prof.p_rule.kind = DimensionRule::Kind::Power;
    } else if (dk == "fixed") {
      prof.p_rule.kind = DimensionRule::Kind::Fixed;
    } else {
      fail(ErrorCode::InvalidConfig, "unknown dimension rule '" + dk + "'");
    }
    prof.p_rule.value = dim.at("value").get<double>();
  }
  return prof;
}

}  // namespace

json setup_to_json(const SetupSpec& s) {
  const char* dim_kind = s.profile.p_rule.kind == DimensionRule::Kind::Linear  ? "linear"
                         : s.profile.p_rule.kind == DimensionRule::Kind::Power ? "power"
                                                                               : "fixed";
  json j{{"id", s.id},
         {"spectrum", spectrum_to_json(s.profile)},
         {"dimension", {{"kind", dim_kind}, {"value", s.profile.p_rule.value}}},
         {"rotation", s.rotation == SetupSpec::Rotation::Indicator ? "indicator" : "identity"},
         {"relocate_endogenous", s.relocate_endogenous},
         {"theta0", rule_to_json(s.theta0)},
         {"correlation", rule_to_json(s.correlation)}};
  j["split"] = s.split == SplitKind::Orthogonal ? json{{"kind", "orthogonal"}}
                                                : json{{"kind", "nonorthogonal"}, {"alpha", s.alpha}};
  j["correlation"]["target"] = s.target == SetupSpec::Target::Rho ? "rho" : "omega";
  j["truncation_level"] = s.truncation_level ? json(*s.truncation_level) : json(nullptr);
  j["sigma"] = s.sigma ? json(*s.sigma) : json(nullptr);
  return j;
}

SetupSpec setup_from_json(const json& j) {
  try {
    SetupSpec s;
    s.id = j.value("id", std::string("custom"));
    s.profile = spectrum_from_json(j.at("spectrum"), j.contains("dimension") ? j.at("dimension") : json());
    if (j.contains("split")) {
      const std::string k = j.at("split").at("kind").get<std::string>();
      if (k == "orthogonal") {
        s.split = SplitKind::Orthogonal;
      } else if (k == "nonorthogonal") {
        s.split = SplitKind::NonOrthogonal;
        s.alpha = j.at("split").value("alpha", 1.01);
      } else {
        fail(ErrorCode::InvalidConfig, "unknown split '" + k + "'");
      }
    }
    if (j.contains("truncation_level") && !j.at("truncation_level").is_null()) {
      s.truncation_level = j.at("truncation_level").get<Index>();
    }
    const std::string rot = j.value("rotation", std::string("indicator"));
    if (rot == "indicator") {
      s.rotation = SetupSpec::Rotation::Indicator;
    } else if (rot == "identity") {
      s.rotation = SetupSpec::Rotation::Identity;
    } else {
      fail(ErrorCode::InvalidConfig, "unknown rotation '" + rot + "'");
    }
    s.relocate_endogenous = j.value("relocate_endogenous", false);
    s.theta0 = rule_from_json(j.at("theta0"));
    s.correlation = rule_from_json(j.at("correlation"));
    const std::string target = j.at("correlation").value("target", std::string("rho"));
    if (target == "rho") {
      s.target = SetupSpec::Target::Rho;
    } else if (target == "omega") {
      s.target = SetupSpec::Target::Omega;
    } else {
      fail(ErrorCode::InvalidConfig, "unknown correlation target '" + target + "'");
    }
    if (j.contains("sigma") && !j.at("sigma").is_null()) s.sigma = j.at("sigma").get<double>();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("setup: ") + e.what());
  }
}

}  // namespace ridgeless
