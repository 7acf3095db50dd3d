// Command-line front end: simulate, ranks, conditions, bounds, cgmt-check, compare.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ridgeless/cgmt.hpp"
#include "ridgeless/error.hpp"
#include "ridgeless/harness.hpp"
#include "ridgeless/metrics.hpp"

using namespace ridgeless;

namespace {

std::string default_output_dir() {
  const char* env = std::getenv("RIDGELESS_OUTPUT_DIR");
  return env && *env ? env : "ridgeless_out";
}

std::string join_path(const std::string& dir, const std::string& file) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
  return (std::filesystem::path(dir) / file).string();
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::InvalidMatrix, "non-numeric entry '" + cell + "' in '" + path + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::InvalidMatrix, "ragged rows in '" + path + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::InvalidMatrix, "'" + path + "' is empty");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void print_summary(const ExperimentResult& result) {
  std::cout << "setup,n,estimator,count,mean,stderr\n";
  for (const auto& a : result.aggregates) {
    std::cout << a.setup << ',' << a.n << ',' << a.estimator << ',' << a.count << ','
              << a.mean << ',' << a.stderr_mean << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ridgeless regression under endogeneity: simulations and diagnostics"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = default_output_dir();
  bool full_grid = false;

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a JSON config");
  std::string config_path;
  simulate->add_option("--config", config_path, "JSON experiment config")->required();
  auto* sim_seed = simulate->add_option("--seed", seed, "Override base_seed");
  auto* sim_threads = simulate->add_option("--threads", threads, "Worker threads");
  auto* sim_out = simulate->add_option("--output-dir", output_dir, "Output directory");
  simulate->add_flag("--full-grid", full_grid, "Use the full n grid up to 1000");

  auto* ranks = app.add_subcommand("ranks", "Effective ranks of a matrix or setup spectrum");
  std::string matrix_arg;
  Index ranks_n = 100;
  int mc = 0;
  ranks->add_option("--matrix", matrix_arg, "CSV file or setup id")->required();
  ranks->add_option("--n", ranks_n, "Sample size for setup spectra");
  ranks->add_option("--mc", mc, "Monte Carlo samples for l2 norm ranks (0 = skip)");
  ranks->add_option("--seed", seed, "Monte Carlo seed");

  auto* conditions = app.add_subcommand("conditions", "Benign-overfitting condition sequences");
  std::string profile = "example1";
  std::vector<Index> n_grid;
  conditions->add_option("--profile", profile, "Setup id");
  conditions->add_option("--n-grid", n_grid, "Comma separated sample sizes")->delimiter(',');
  conditions->add_option("--output-dir", output_dir, "Output directory");

  auto* bounds = app.add_subcommand("bounds", "Norm and RMSE bounds for a setup");
  std::string bound_setup = "iii";
  Index bound_n = 100;
  double delta = 0.1;
  bounds->add_option("--setup", bound_setup, "Setup id");
  bounds->add_option("--n", bound_n, "Sample size");
  bounds->add_option("--delta", delta, "Failure probability");
  bounds->add_option("--output-dir", output_dir, "Output directory");

  auto* cgmt = app.add_subcommand("cgmt-check", "Tail dominance of the primary over the auxiliary problem");
  Index cgmt_n = 3;
  Index cgmt_p = 4;
  Index reps = 10000;
  cgmt->add_option("--n", cgmt_n, "Sample size");
  cgmt->add_option("--p", cgmt_p, "Total dimension (split in half)");
  cgmt->add_option("--reps", reps, "Repetitions");
  cgmt->add_option("--seed", seed, "Seed");
  cgmt->add_option("--threads", threads, "Worker threads");
  cgmt->add_option("--output-dir", output_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Ridgeless against lasso-IV on setups vii-ix");
  std::string compare_setup = "vii";
  int compare_reps = 30;
  compare->add_option("--setup", compare_setup, "vii, viii or ix")
      ->check(CLI::IsMember({"vii", "viii", "ix"}));
  compare->add_option("--reps", compare_reps, "Repetitions");
  compare->add_option("--n-grid", n_grid, "Comma separated sample sizes")->delimiter(',');
  auto* cmp_seed = compare->add_option("--seed", seed, "Base seed");
  compare->add_option("--threads", threads, "Worker threads");
  compare->add_option("--output-dir", output_dir, "Output directory");
  compare->add_flag("--full-grid", full_grid, "Use the full n grid up to 1000");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (*sim_seed) cfg.base_seed = seed;
      if (*sim_threads) cfg.threads = threads;
      if (*sim_out) {
        cfg.output_dir = output_dir;
      } else if (std::getenv("RIDGELESS_OUTPUT_DIR")) {
        cfg.output_dir = output_dir;
      }
      if (full_grid) cfg.n_grid = default_n_grid(cfg.setup, true);
      const ExperimentResult result = run_setup(cfg);
      emit_outputs(result, cfg.output_dir);
      print_summary(result);
    } else if (ranks->parsed()) {
      SymMatrix sigma = std::filesystem::exists(matrix_arg)
                            ? SymMatrix(read_matrix_csv(matrix_arg))
                            : SymMatrix::diagonal(spectrum(setup_preset(matrix_arg).profile, ranks_n).eigenvalues);
      const EffectiveRanks er = effective_ranks(sigma);
      std::cout << "r," << er.r << "\nR," << er.R << '\n';
      if (mc > 0) {
        const NormRanks nr = norm_effective_ranks(sigma, NormSpec{}, mc, seed);
        std::cout << "r_l2," << nr.r_norm << "\nr_l2_stderr," << nr.stderr_r << "\nR_l2,"
                  << nr.R_norm << "\nR_l2_stderr," << nr.stderr_R << '\n';
      }
    } else if (conditions->parsed()) {
      if (n_grid.empty()) n_grid = {100, 200, 300, 400, 500, 600, 700, 800};
      const SetupSpec spec = setup_preset(profile);
      ConditionMode mode = condition_mode(spec);
      if (profile == "identity") mode = ConditionMode::Exogenous;
      const ConditionReport report = evaluate_conditions(
          [&](Index n) { return build_spectral(spec, n); }, n_grid, mode);
      write_condition_report_csv(report, join_path(output_dir, "conditions_" + profile + ".csv"));
      for (const auto& name : report.names) {
        const auto& s = report.sequences.at(name);
        std::cout << name << ": " << (s.decreasing ? "decreasing" : "not decreasing")
                  << ", final " << s.final_value << '\n';
      }
    } else if (bounds->parsed()) {
      const SetupSpec spec = setup_preset(bound_setup);
      const SpectralQuantities q = build_spectral(spec, bound_n);
      std::vector<BoundReport> reports;
      reports.push_back(norm_upper_bound(q, bound_n, delta));
      reports.push_back(norm_upper_bound(q, bound_n, delta, literal_norm_constant(spec.split)));
      reports.push_back(rmse_upper_bound(q, bound_n, delta, reports.front().norm_bound));
      write_bound_reports_csv(reports, join_path(output_dir, "bounds_" + bound_setup + ".csv"));
      std::cout << "norm_bound_principal," << reports[0].norm_bound << "\nnorm_bound_literal,"
                << reports[1].norm_bound << "\nrmse_bound," << reports[2].rmse_bound
                << "\nrmse_principal," << reports[2].rmse_principal << '\n';
    } else if (cgmt->parsed()) {
      TailOptions opts;
      opts.reps = reps;
      opts.seed = seed;
      opts.threads = threads;
      const TailReport report = tail_dominance_check(default_cgmt_slice(cgmt_p), cgmt_n, opts);
      write_tail_report_csv(report, join_path(output_dir, "cgmt_tail.csv"));
      std::cout << "po_feasible," << report.po_feasible << "\nao_feasible," << report.ao_feasible
                << "\nviolations," << report.violations << '\n';
      return report.violations == 0 ? 0 : 1;
    } else if (compare->parsed()) {
      ExperimentConfig cfg;
      cfg.setup = compare_setup;
      cfg.n_grid = !n_grid.empty() ? n_grid : default_n_grid(compare_setup, full_grid);
      cfg.repetitions = compare_reps;
      if (*cmp_seed) cfg.base_seed = seed;
      cfg.threads = threads;
      cfg.estimators = {"ridgeless", "lasso_iv"};
      cfg.output_dir = output_dir;
      const ExperimentResult result = run_setup(cfg);
      emit_outputs(result, cfg.output_dir);
      print_summary(result);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::IoError ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
