#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bae/common.hpp"
#include "bae/experiment.hpp"

using namespace bae;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("experiment");

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("exp_test_tmp") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunOptions opts_for(const fs::path& dir, int threads = 1) {
  RunOptions opts;
  opts.out_dir = dir.string();
  opts.threads = threads;
  return opts;
}

const char* kSimulateConfig =
    "seed = 3\n"
    "env.difficulties = 0.3, 0.7\n"
    "env.answers = 3\n"
    "env.confidence_levels = 11\n"
    "sim.prompts = 4\n"
    "sim.group_size = 6\n"
    "sim.reward = brier\n";

}  // namespace

TEST_CASE("simulate writes rollout and advantage logs deterministically") {
  TempDir a("sim_a"), b("sim_b");
  const KeyValueConfig cfg = KeyValueConfig::from_string(kSimulateConfig);
  run_command(Command::simulate, cfg, opts_for(a.path));
  run_command(Command::simulate, KeyValueConfig::from_string(kSimulateConfig),
              opts_for(b.path, 4));

  for (const char* name : {"rollouts.jsonl", "advantages.jsonl"}) {
    const std::string first = slurp(a.path / name);
    CHECK(first == slurp(b.path / name));
    CHECK(first.find("config_hash") != std::string::npos);
  }
}

TEST_CASE("seed override changes outputs and the embedded hash") {
  TempDir a("seed_a"), b("seed_b");
  const KeyValueConfig cfg = KeyValueConfig::from_string(kSimulateConfig);
  run_command(Command::simulate, cfg, opts_for(a.path));
  RunOptions opts = opts_for(b.path);
  opts.seed_override = 99;
  run_command(Command::simulate, KeyValueConfig::from_string(kSimulateConfig), opts);
  CHECK(slurp(a.path / "rollouts.jsonl") != slurp(b.path / "rollouts.jsonl"));
}

TEST_CASE("unknown keys fail before any work") {
  TempDir dir("unknown");
  const KeyValueConfig cfg =
      KeyValueConfig::from_string("seed = 1\nsim.promts = 4\n");
  CHECK_THROWS_AS(run_command(Command::simulate, cfg, opts_for(dir.path)), ConfigError);
  CHECK_FALSE(fs::exists(dir.path / "rollouts.jsonl"));
}

TEST_CASE("train emits a report plus a loadable policy snapshot") {
  TempDir dir("train");
  const KeyValueConfig cfg = KeyValueConfig::from_string(
      "seed = 5\n"
      "env.difficulties = 0.5\n"
      "trainer.steps = 6\n"
      "trainer.group_size = 4\n"
      "trainer.batch_prompts = 2\n"
      "trainer.probe_size = 16\n");
  run_command(Command::train, cfg, opts_for(dir.path));

  const std::string report = slurp(dir.path / "training_report.jsonl");
  // meta line + one line per step
  CHECK(std::count(report.begin(), report.end(), '\n') == 7);
  CHECK(fs::exists(dir.path / "policy.json"));

  // The snapshot feeds straight back into eval.
  TempDir eval_dir("train_eval");
  const KeyValueConfig eval_cfg = KeyValueConfig::from_string(
      "seed = 6\n"
      "eval.policy = " + (dir.path / "policy.json").string() + "\n" +
      "eval.prompts = 20\n"
      "eval.samples_per_prompt = 4\n"
      "eval.bootstrap_iterations = 50\n");
  run_command(Command::eval, eval_cfg, opts_for(eval_dir.path));
  const auto rows = read_metric_report((eval_dir.path / "metrics.csv").string());
  CHECK(rows.size() == 4);
}

TEST_CASE("oracle study table has one row per estimator and stratum") {
  TempDir dir("oracle");
  const KeyValueConfig cfg = KeyValueConfig::from_string(
      "seed = 7\n"
      "env.difficulties = 0.4, 0.6\n"
      "oracle.prompts = 10\n"
      "oracle.group_size = 8\n"
      "oracle.n_mc = 4\n"
      "oracle.estimators = group_mean, batch_mean, ocb\n"
      "oracle.policy = calibrated\n"
      "oracle.sharpness = 6\n");
  run_command(Command::oracle_study, cfg, opts_for(dir.path));
  const std::string table = slurp(dir.path / "rmse_table.csv");
  // 3 estimators x 2 strata = 6 data rows after comment + header.
  CHECK(std::count(table.begin(), table.end(), '\n') == 8);
  CHECK(table.find("ocb,correct,") != std::string::npos);
  CHECK(table.find("batch_mean,incorrect,") != std::string::npos);
  CHECK(fs::exists(dir.path / "oracle_rollouts.jsonl"));
}

TEST_CASE("eval metrics report all four metrics with sems") {
  TempDir dir("eval");
  const KeyValueConfig cfg = KeyValueConfig::from_string(
      "seed = 8\n"
      "env.difficulties = 0.3, 0.7\n"
      "eval.policy = calibrated\n"
      "eval.prompts = 40\n"
      "eval.samples_per_prompt = 4\n"
      "eval.bootstrap_iterations = 100\n");
  run_command(Command::eval, cfg, opts_for(dir.path));
  const auto rows = read_metric_report((dir.path / "metrics.csv").string());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].metric == "acc");
  CHECK(rows[1].metric == "auroc");
  CHECK(rows[2].metric == "ece");
  CHECK(rows[3].metric == "brier");
  for (const MetricRow& row : rows) {
    REQUIRE(row.value.has_value());
    CHECK(row.sem.has_value());
    CHECK(row.config_hash.size() == 16);
  }
}

TEST_CASE("tts curves cover every strategy and grid point") {
  TempDir dir("tts");
  const KeyValueConfig cfg = KeyValueConfig::from_string(
      "seed = 9\n"
      "env.difficulties = 0.4\n"
      "tts.policy = calibrated\n"
      "tts.prompts = 30\n"
      "tts.max_samples = 8\n"
      "tts.grid = 1, 2, 4, 8\n");
  run_command(Command::tts, cfg, opts_for(dir.path));
  const std::string table = slurp(dir.path / "tts_curves.csv");
  // pass1 + (passk + 3 strategies) x 4 grid points = 17 data rows.
  CHECK(std::count(table.begin(), table.end(), '\n') == 19);
  CHECK(table.find("weighted_maj,8,") != std::string::npos);

  // Grid beyond the sample budget is a config error.
  const KeyValueConfig bad = KeyValueConfig::from_string(
      "seed = 9\nenv.difficulties = 0.4\ntts.max_samples = 4\ntts.grid = 8\n");
  TempDir bad_dir("tts_bad");
  CHECK_THROWS_AS(run_command(Command::tts, bad, opts_for(bad_dir.path)), ConfigError);
}

TEST_CASE("compare_reports flags significant deltas and schema mismatches") {
  const std::vector<MetricRow> a = {{"acc", 0.5, 0.01, 100, "h"},
                                    {"ece", 0.2, 0.005, 100, "h"}};
  const std::vector<MetricRow> b = {{"acc", 0.8, 0.01, 100, "h"},
                                    {"ece", 0.21, 0.005, 100, "h"}};
  const auto rows = compare_reports(a, b);
  REQUIRE(rows.size() == 2);
  CHECK(*rows[0].delta == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(rows[0].significant);
  CHECK(*rows[1].delta == doctest::Approx(0.01).epsilon(1e-10));
  CHECK_FALSE(rows[1].significant);

  // Identical reports: zero deltas, nothing significant.
  for (const ComparisonRow& row : compare_reports(a, a)) {
    CHECK(*row.delta == 0.0);
    CHECK_FALSE(row.significant);
  }

  const std::vector<MetricRow> other = {{"brier", 0.1, 0.01, 100, "h"}};
  CHECK_THROWS_AS(compare_reports(a, other), ConfigError);
  CHECK_THROWS_AS(compare_reports(a, b, {"missing"}), ConfigError);

  const std::string csv = comparison_to_csv(rows);
  CHECK(csv.find("metric,a,b,delta,significant") == 0);
  CHECK(csv.find("acc,") != std::string::npos);
}

TEST_SUITE_END();
