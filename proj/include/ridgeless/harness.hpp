#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ridgeless/sampling.hpp"
#include "ridgeless/setups.hpp"

namespace ridgeless {

struct ProfileOverrides {
  std::optional<double> sigma;
  std::optional<double> alpha;
  std::optional<double> log_factor;  // LogPoly spectra only
};

struct ExperimentConfig {
  std::string setup = "i";  // preset id or "custom"
  std::optional<SetupSpec> custom_setup;
  ProfileOverrides overrides;
  std::vector<Index> n_grid;
  int repetitions = 30;
  std::uint64_t base_seed = 20240601;
  InstrumentLaw instrument;
  std::vector<std::string> estimators{"ridgeless"};
  std::string output_dir = "ridgeless_out";
  int threads = 1;  // not part of the echoed config
};

/// Desk grid {100,...,400}; with full = true, {200,...,1000} for setups i-vi
/// and {100,...,1000} otherwise.
std::vector<Index> default_n_grid(const std::string& setup, bool full = false);

void validate(const ExperimentConfig& cfg);
SetupSpec resolve_setup(const ExperimentConfig& cfg);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
  std::string setup;
  Index n = 0;
  int rep = 0;
  std::string estimator;
  double projected_rmse = 0.0;
};

struct Aggregate {
  std::string setup;
  Index n = 0;
  std::string estimator;
  int count = 0;
  double mean = 0.0;
  double stdev = 0.0;
  double stderr_mean = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunRecord> records;  // ordered by n, rep, estimator
  std::vector<Aggregate> aggregates;
  double wall_seconds = 0.0;
};

/// Dataset seed of repetition r at sample size n.
std::uint64_t dataset_seed(std::uint64_t base_seed, int rep, Index n);

ExperimentResult run_setup(const ExperimentConfig& cfg);

/// Mean, sample stdev and stderr per (setup, n, estimator), in first-seen order.
std::vector<Aggregate> aggregate(const std::vector<RunRecord>& records);

const Aggregate* find_aggregate(const ExperimentResult& result, Index n,
                                const std::string& estimator);

/// records.csv, summary.csv, plot_<setup>.csv, config.json, run_meta.json.
void emit_outputs(const ExperimentResult& result, const std::string& dir);

void write_records_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> read_records_csv(const std::string& path);

}  // namespace ridgeless
