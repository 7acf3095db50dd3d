#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ridgeless/harness.hpp"
#include "test_helpers.hpp"

using namespace ridgeless;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.setup = "i";
  c.n_grid = {100, 140};
  c.repetitions = 4;
  c.base_seed = 77;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ridgeless_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RIDGELESS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, Validation) {
  auto bad = [](auto mutate) {
    ExperimentConfig c = small_config();
    mutate(c);
    expect_error(ErrorCode::InvalidConfig, [&] { validate(c); });
  };
  bad([](ExperimentConfig& c) { c.repetitions = 0; });
  bad([](ExperimentConfig& c) { c.n_grid = {}; });
  bad([](ExperimentConfig& c) { c.n_grid = {200, 100}; });
  bad([](ExperimentConfig& c) { c.estimators = {"ols"}; });
  bad([](ExperimentConfig& c) { c.instrument = InstrumentLaw::student_t(2.0); });
  bad([](ExperimentConfig& c) { c.threads = 0; });
  bad([](ExperimentConfig& c) { c.setup = "custom"; });
  validate(small_config());
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = small_config();
  c.instrument = InstrumentLaw::student_t(5.0);
  c.overrides.alpha = 1.2;
  c.estimators = {"ridgeless", "lasso_iv"};
  const nlohmann::json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_FALSE(j.contains("threads"));
}

TEST(Config, DefaultGrids) {
  EXPECT_EQ(default_n_grid("i").front(), 100);
  EXPECT_EQ(default_n_grid("i").back(), 400);
  EXPECT_EQ(default_n_grid("iii", true).front(), 200);
  EXPECT_EQ(default_n_grid("vii", true).front(), 100);
  EXPECT_EQ(default_n_grid("vii", true).back(), 1000);
}

TEST(Config, MissingFileIsIoError) {
  expect_error(ErrorCode::IoError, [] { load_config("/nonexistent/dir/cfg.json"); });
}

TEST(Run, DeterministicAndThreadInvariant) {
  ExperimentConfig a = small_config();
  ExperimentConfig b = small_config();
  b.threads = 3;
  const ExperimentResult ra = run_setup(a);
  const ExperimentResult rb = run_setup(b);
  ASSERT_EQ(ra.records.size(), 8u);
  ASSERT_EQ(ra.records.size(), rb.records.size());
  for (std::size_t i = 0; i < ra.records.size(); ++i) {
    EXPECT_EQ(ra.records[i].projected_rmse, rb.records[i].projected_rmse);
    EXPECT_EQ(ra.records[i].n, rb.records[i].n);
    EXPECT_EQ(ra.records[i].rep, rb.records[i].rep);
  }
  const fs::path d = scratch("det");
  write_records_csv(ra.records, (d / "a.csv").string());
  write_records_csv(rb.records, (d / "b.csv").string());
  EXPECT_EQ(slurp(d / "a.csv"), slurp(d / "b.csv"));
}

TEST(Run, RepetitionsAreIndependentOfTheirCount) {
  ExperimentConfig two = small_config();
  two.repetitions = 2;
  ExperimentConfig three = small_config();
  three.repetitions = 3;
  const ExperimentResult r2 = run_setup(two);
  const ExperimentResult r3 = run_setup(three);
  for (const RunRecord& rec : r2.records) {
    bool found = false;
    for (const RunRecord& other : r3.records) {
      if (other.n == rec.n && other.rep == rec.rep && other.estimator == rec.estimator) {
        EXPECT_EQ(other.projected_rmse, rec.projected_rmse);
        found = true;
      }
    }
    EXPECT_TRUE(found);
  }
}

TEST(Run, CsvRoundTripReproducesAggregates) {
  const ExperimentResult r = run_setup(small_config());
  const fs::path d = scratch("roundtrip");
  const std::string path = (d / "records.csv").string();
  write_records_csv(r.records, path);
  const std::vector<RunRecord> back = read_records_csv(path);
  ASSERT_EQ(back.size(), r.records.size());
  const std::vector<Aggregate> agg = aggregate(back);
  ASSERT_EQ(agg.size(), r.aggregates.size());
  for (std::size_t i = 0; i < agg.size(); ++i) {
    EXPECT_EQ(agg[i].mean, r.aggregates[i].mean);
    EXPECT_EQ(agg[i].stdev, r.aggregates[i].stdev);
    EXPECT_EQ(agg[i].count, r.aggregates[i].count);
  }
  const Aggregate* a = find_aggregate(r, 140, "ridgeless");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->count, 4);
  EXPECT_EQ(find_aggregate(r, 141, "ridgeless"), nullptr);
}

TEST(Run, AggregateHandComputed) {
  std::vector<RunRecord> recs{{"x", 10, 0, "ridgeless", 1.0},
                              {"x", 10, 1, "ridgeless", 2.0},
                              {"x", 10, 2, "ridgeless", 6.0}};
  const Aggregate a = aggregate(recs).at(0);
  EXPECT_DOUBLE_EQ(a.mean, 3.0);
  EXPECT_DOUBLE_EQ(a.stdev, std::sqrt(7.0));
  EXPECT_DOUBLE_EQ(a.stderr_mean, std::sqrt(7.0 / 3.0));
}

TEST(Outputs, FilesAndHeaders) {
  const ExperimentResult r = run_setup(small_config());
  const fs::path d = scratch("outputs");
  emit_outputs(r, d.string());
  for (const char* f : {"records.csv", "summary.csv", "plot_i.csv", "config.json", "run_meta.json"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  std::ifstream in(d / "records.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "setup,n,rep,estimator,projected_rmse");
  std::ifstream sin(d / "summary.csv");
  std::getline(sin, header);
  EXPECT_EQ(header, "setup,n,estimator,count,mean,stdev,stderr");
}

TEST(Outputs, UnwritableDirectory) {
  const ExperimentResult r = run_setup(small_config());
  const fs::path d = scratch("blocked");
  std::ofstream(d / "file") << "x";
  expect_error(ErrorCode::IoError, [&] { emit_outputs(r, (d / "file" / "sub").string()); });
}

TEST(Cli, ExitCodes) {
  const fs::path d = scratch("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("simulate"), 2);
  EXPECT_EQ(run_cli("simulate --config " + (d / "missing.json").string()), 3);
  {
    std::ofstream(d / "bad.json") << R"({"setup": "i", "repetitions": 0})";
  }
  EXPECT_EQ(run_cli("simulate --config " + (d / "bad.json").string() + " --output-dir " + d.string()), 2);
  {
    std::ofstream(d / "ok.json") << R"({"setup": "i", "repetitions": 2, "n_grid": [100]})";
  }
  EXPECT_EQ(run_cli("simulate --config " + (d / "ok.json").string() + " --output-dir " + (d / "out").string()), 0);
  EXPECT_TRUE(fs::exists(d / "out" / "records.csv"));
  EXPECT_EQ(run_cli("bounds --setup iii --n 100 --delta 0.1 --output-dir " + d.string()), 0);
  EXPECT_EQ(run_cli("bounds --setup iii --n 100 --delta 1.5 --output-dir " + d.string()), 2);
  EXPECT_EQ(run_cli("conditions --profile example1 --n-grid 100,200 --output-dir " + d.string()), 2);
  EXPECT_EQ(run_cli("conditions --profile example1 --n-grid 100,200,300 --output-dir " + d.string()), 0);
  EXPECT_TRUE(fs::exists(d / "conditions_example1.csv"));
}
