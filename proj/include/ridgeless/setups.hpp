#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ridgeless/covariance.hpp"
#include "ridgeless/metrics.hpp"

namespace ridgeless {

/// Coordinate-wise rule v_i (1-based i) restricted to a support set.
struct VectorRule {
  enum class Kind { Zero, InverseSqrt, Harmonic, ExpDecay, LogHarmonic };
  enum class Support { All, FractionOfN, Stride, UpToTruncation };

  Kind kind = Kind::Zero;
  double scale = 1.0;
  double rate = 1.0;  // ExpDecay: scale * exp(-i / rate)
  double beta = 2.0;  // LogHarmonic: scale / i * log(i + 1)^-beta
  Support support = Support::All;
  double fraction = 1.0;  // FractionOfN: i <= round(fraction * n)
  Index limit = 0;        // Stride: i <= limit and i % stride == residue
  Index stride = 1;
  Index residue = 0;

  Vector evaluate(Index p, Index n, Index k_star) const;
};

/// One member of a family of models indexed by n.
struct SetupSpec {
  enum class Rotation { Indicator, Identity };
  enum class Target { Rho, Omega };  // which vector the correlation rule gives

  std::string id = "custom";
  SpectrumProfile profile;
  SplitKind split = SplitKind::Orthogonal;
  double alpha = 1.01;
  std::optional<Index> truncation_level;  // overrides the scan when set
  Rotation rotation = Rotation::Indicator;
  bool relocate_endogenous = false;
  VectorRule theta0;
  Target target = Target::Rho;
  VectorRule correlation;  // eigen coordinates
  std::optional<double> sigma;
};

/// Setup-(i) eigenvalue factor: lambda_i = 300 / i * (log(i + 1) * kLogFactor)^-2.
extern const double kSetupLogFactor;

std::vector<std::string> preset_ids();
SetupSpec setup_preset(const std::string& id);

struct BuiltModel {
  EndogeneityModel model;
  std::vector<Index> endogenous;  // ambient indices with omega_j != 0
};

BuiltModel build_model(const SetupSpec& spec, Index n);

/// Spectral summary of build_model(spec, n) without forming the rotation.
SpectralQuantities build_spectral(const SetupSpec& spec, Index n);

/// Default condition mode of a setup family.
ConditionMode condition_mode(const SetupSpec& spec);

nlohmann::json setup_to_json(const SetupSpec& spec);
SetupSpec setup_from_json(const nlohmann::json& j);

}  // namespace ridgeless
