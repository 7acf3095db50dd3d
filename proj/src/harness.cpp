#include "ridgeless/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ridgeless/error.hpp"
#include "ridgeless/estimators.hpp"
#include "ridgeless/parallel.hpp"
#include "ridgeless/rng.hpp"

namespace ridgeless {

using nlohmann::json;

namespace {

bool is_sparse_family(const std::string& id) {
  return id == "i" || id == "ii" || id == "iii" || id == "iv" || id == "v" || id == "vi";
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) fail(ErrorCode::IoError, "write to '" + path + "' failed");
}

}  // namespace

std::vector<Index> default_n_grid(const std::string& setup, bool full) {
  std::vector<Index> grid;
  const Index start = full && is_sparse_family(setup) ? 200 : 100;
  const Index stop = full ? 1000 : 400;
  for (Index n = start; n <= stop; n += 100) grid.push_back(n);
  return grid;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) fail(ErrorCode::InvalidConfig, "repetitions must be >= 1");
  if (cfg.n_grid.empty()) fail(ErrorCode::InvalidConfig, "n_grid is empty");
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 2) fail(ErrorCode::InvalidConfig, "n_grid entries must be >= 2");
    if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
      fail(ErrorCode::InvalidConfig, "n_grid must be strictly ascending");
    }
  }
  if (cfg.estimators.empty()) fail(ErrorCode::InvalidConfig, "no estimators requested");
  for (const auto& e : cfg.estimators) {
    if (e != "ridgeless" && e != "lasso_iv") {
      fail(ErrorCode::InvalidConfig, "unknown estimator '" + e + "'");
    }
  }
  if (cfg.instrument.kind == InstrumentLaw::Kind::StudentT && !(cfg.instrument.dof > 2.0)) {
    fail(ErrorCode::InvalidConfig, "student_t instruments need dof > 2");
  }
  if (cfg.threads < 1) fail(ErrorCode::InvalidConfig, "threads must be >= 1");
  if (cfg.setup == "custom") {
    if (!cfg.custom_setup) fail(ErrorCode::InvalidConfig, "setup 'custom' needs custom_setup");
  } else {
    setup_preset(cfg.setup);
  }
}

SetupSpec resolve_setup(const ExperimentConfig& cfg) {
  SetupSpec spec = cfg.setup == "custom" ? *cfg.custom_setup : setup_preset(cfg.setup);
  if (cfg.overrides.sigma) spec.sigma = cfg.overrides.sigma;
  if (cfg.overrides.alpha) spec.alpha = *cfg.overrides.alpha;
  if (cfg.overrides.log_factor) {
    auto* lp = std::get_if<LogPoly>(&spec.profile.shape);
    if (!lp) fail(ErrorCode::InvalidConfig, "log_factor applies to log_poly spectra only");
    lp->log_factor = *cfg.overrides.log_factor;
  }
  return spec;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j{{"setup", cfg.setup},
         {"n_grid", cfg.n_grid},
         {"repetitions", cfg.repetitions},
         {"base_seed", cfg.base_seed},
         {"estimators", cfg.estimators},
         {"output_dir", cfg.output_dir}};
  j["instrument_dist"] = cfg.instrument.kind == InstrumentLaw::Kind::Gaussian
                             ? json{{"kind", "gaussian"}}
                             : json{{"kind", "student_t"}, {"dof", cfg.instrument.dof}};
  if (cfg.custom_setup) j["custom_setup"] = setup_to_json(*cfg.custom_setup);
  json ov = json::object();
  if (cfg.overrides.sigma) ov["sigma"] = *cfg.overrides.sigma;
  if (cfg.overrides.alpha) ov["alpha"] = *cfg.overrides.alpha;
  if (cfg.overrides.log_factor) ov["log_factor"] = *cfg.overrides.log_factor;
  if (!ov.empty()) j["profile"] = ov;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.setup = j.value("setup", cfg.setup);
    if (j.contains("custom_setup")) cfg.custom_setup = setup_from_json(j.at("custom_setup"));
    cfg.n_grid = j.contains("n_grid") ? j.at("n_grid").get<std::vector<Index>>()
                                      : default_n_grid(cfg.setup);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    if (j.contains("estimators")) cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("instrument_dist")) {
      const json& d = j.at("instrument_dist");
      const std::string kind = d.is_string() ? d.get<std::string>() : d.at("kind").get<std::string>();
      if (kind == "gaussian") {
        cfg.instrument = InstrumentLaw::gaussian();
      } else if (kind == "student_t") {
        cfg.instrument = InstrumentLaw::student_t(d.is_object() ? d.value("dof", 5.0) : 5.0);
      } else {
        fail(ErrorCode::InvalidConfig, "unknown instrument_dist '" + kind + "'");
      }
    }
    if (j.contains("profile")) {
      const json& p = j.at("profile");
      if (p.contains("sigma")) cfg.overrides.sigma = p.at("sigma").get<double>();
      if (p.contains("alpha")) cfg.overrides.alpha = p.at("alpha").get<double>();
      if (p.contains("log_factor")) cfg.overrides.log_factor = p.at("log_factor").get<double>();
    }
    return cfg;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, "config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t dataset_seed(std::uint64_t base_seed, int rep, Index n) {
  return derive_seed(repetition_seed(base_seed, static_cast<std::uint64_t>(rep)),
                     static_cast<std::uint64_t>(n));
}

namespace {

double eigen_frame_rmse(const EndogeneityModel& model, const Vector& theta, Frame frame) {
  Vector diff = frame == Frame::Eigen ? Vector(theta - model.theta0_eig)
                                      : model.cov.basis.to_eigen(theta - model.theta0);
  return projected_rmse_diag(diff, Vector::Zero(diff.size()), model.cov.z_eigs);
}

}  // namespace

ExperimentResult run_setup(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const SetupSpec spec = resolve_setup(cfg);
  bool need_ambient = false;
  for (const auto& e : cfg.estimators) need_ambient = need_ambient || e == "lasso_iv";
  const Frame frame = need_ambient ? Frame::Ambient : Frame::Eigen;
  const int n_est = static_cast<int>(cfg.estimators.size());

  ExperimentResult result;
  result.config = cfg;
  for (const Index n : cfg.n_grid) {
    const std::string where = "setup " + spec.id + ", n=" + std::to_string(n);
    BuiltModel built;
    try {
      built = build_model(spec, n);
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
    std::vector<RunRecord> block(static_cast<std::size_t>(cfg.repetitions * n_est));
    parallel_for(cfg.repetitions, cfg.threads, [&](long r) {
      const std::uint64_t seed = dataset_seed(cfg.base_seed, static_cast<int>(r), n);
      try {
        const Dataset data = sample_dataset(built.model, n, seed, cfg.instrument, frame, spec.id);
        for (int e = 0; e < n_est; ++e) {
          const std::string& name = cfg.estimators[static_cast<std::size_t>(e)];
          FitResult fit;
          if (name == "ridgeless") {
            fit = min_norm_interpolator(data.X, data.Y);
          } else {
            LassoIvOptions opts;
            opts.split_seed = derive_seed(seed, 5);
            fit = split_sample_lasso_iv(data, built.endogenous, opts);
          }
          RunRecord& rec = block[static_cast<std::size_t>(r * n_est + e)];
          rec = {spec.id, n, static_cast<int>(r), name,
                 eigen_frame_rmse(built.model, fit.theta_hat, data.frame)};
        }
      } catch (const Error& e) {
        fail(e.code(), where + ", rep=" + std::to_string(r) + ": " + e.what());
      }
    });
    result.records.insert(result.records.end(), block.begin(), block.end());
  }
  result.aggregates = aggregate(result.records);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<Aggregate> aggregate(const std::vector<RunRecord>& records) {
  std::vector<Aggregate> out;
  std::map<std::tuple<std::string, Index, std::string>, std::vector<double>> groups;
  std::vector<std::tuple<std::string, Index, std::string>> order;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.setup, r.n, r.estimator);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(r.projected_rmse);
  }
  for (const auto& key : order) {
    const auto& v = groups.at(key);
    Aggregate a;
    std::tie(a.setup, a.n, a.estimator) = key;
    a.count = static_cast<int>(v.size());
    double sum = 0.0;
    for (double x : v) sum += x;
    a.mean = sum / a.count;
    double ss = 0.0;
    for (double x : v) ss += (x - a.mean) * (x - a.mean);
    a.stdev = a.count > 1 ? std::sqrt(ss / (a.count - 1)) : 0.0;
    a.stderr_mean = a.stdev / std::sqrt(static_cast<double>(a.count));
    out.push_back(a);
  }
  return out;
}

const Aggregate* find_aggregate(const ExperimentResult& result, Index n,
                                const std::string& estimator) {
  for (const auto& a : result.aggregates) {
    if (a.n == n && a.estimator == estimator) return &a;
  }
  return nullptr;
}

void write_records_csv(const std::vector<RunRecord>& records, const std::string& path) {
  auto out = open_out(path);
  out << "setup,n,rep,estimator,projected_rmse\n";
  for (const auto& r : records) {
    out << r.setup << ',' << r.n << ',' << r.rep << ',' << r.estimator << ','
        << format_double(r.projected_rmse) << '\n';
  }
  close_out(out, path);
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "setup,n,rep,estimator,projected_rmse") {
    fail(ErrorCode::InvalidData, "'" + path + "' lacks the records header");
  }
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& s : f) std::getline(ss, s, ',');
    try {
      out.push_back({f[0], static_cast<Index>(std::stoll(f[1])), std::stoi(f[2]), f[3],
                     std::stod(f[4])});
    } catch (const std::exception&) {
      fail(ErrorCode::InvalidData, "malformed row in '" + path + "': " + line);
    }
  }
  return out;
}

void emit_outputs(const ExperimentResult& result, const std::string& dir) {
  if (result.records.empty()) fail(ErrorCode::InvalidData, "no records to write");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);

  write_records_csv(result.records, (base / "records.csv").string());

  const std::string summary_path = (base / "summary.csv").string();
  auto summary = open_out(summary_path);
  summary << "setup,n,estimator,count,mean,stdev,stderr\n";
  for (const auto& a : result.aggregates) {
    summary << a.setup << ',' << a.n << ',' << a.estimator << ',' << a.count << ','
            << format_double(a.mean) << ',' << format_double(a.stdev) << ','
            << format_double(a.stderr_mean) << '\n';
  }
  close_out(summary, summary_path);

  std::map<std::string, std::vector<const Aggregate*>> by_setup;
  for (const auto& a : result.aggregates) by_setup[a.setup].push_back(&a);
  for (const auto& [setup, rows] : by_setup) {
    const std::string path = (base / ("plot_" + setup + ".csv")).string();
    auto out = open_out(path);
    out << "n,estimator,mean,stderr\n";
    for (const Aggregate* a : rows) {
      out << a->n << ',' << a->estimator << ',' << format_double(a->mean) << ','
          << format_double(a->stderr_mean) << '\n';
    }
    close_out(out, path);
  }

  const std::string config_path = (base / "config.json").string();
  auto cfg = open_out(config_path);
  cfg << config_to_json(result.config).dump(2) << '\n';
  close_out(cfg, config_path);

  const std::string meta_path = (base / "run_meta.json").string();
  auto meta = open_out(meta_path);
  meta << json{{"wall_seconds", result.wall_seconds},
               {"threads", result.config.threads},
               {"records", result.records.size()}}
              .dump(2)
       << '\n';
  close_out(meta, meta_path);
}

}  // namespace ridgeless
