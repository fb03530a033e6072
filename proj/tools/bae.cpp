// Command-line front end for the blockwise advantage estimation toolkit.
//
// Subcommands: simulate, train, oracle-study, eval, tts, compare.
// Exit codes: 0 ok, 2 config error, 3 numeric failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bae/common.hpp"
#include "bae/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int threads = 1;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config_path, "Run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--seed", args.seed, "Master seed (overrides the config)")
      ->trigger_on_parse()
      ->each([&args](const std::string&) { args.seed_set = true; });
  app->add_option("--out", args.out_dir, "Output directory (overrides the config)");
  app->add_option("--threads", args.threads, "Worker threads (does not affect results)")
      ->check(CLI::PositiveNumber);
}

int run(bae::Command cmd, const CommonArgs& args) {
  bae::RunOptions opts;
  if (args.seed_set) opts.seed_override = args.seed;
  opts.out_dir = args.out_dir;
  opts.threads = args.threads;
  bae::run_command_from_file(cmd, args.config_path, opts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blockwise advantage estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* simulate = app.add_subcommand("simulate", "Sample rollout groups and dump logs");
  CLI::App* train = app.add_subcommand("train", "Train the tabular policy");
  CLI::App* oracle = app.add_subcommand(
      "oracle-study", "Compare baseline estimators against Monte-Carlo advantages");
  CLI::App* eval = app.add_subcommand("eval", "Accuracy and calibration metrics with SEMs");
  CLI::App* tts = app.add_subcommand("tts", "Test-time scaling curves");
  for (CLI::App* sub : {simulate, train, oracle, eval, tts}) add_common(sub, args);

  CLI::App* compare = app.add_subcommand("compare", "Delta table for two metric reports");
  std::string report_a, report_b, compare_out;
  std::vector<std::string> metrics;
  compare->add_option("--a", report_a, "First metric report")->required()->check(CLI::ExistingFile);
  compare->add_option("--b", report_b, "Second metric report")->required()->check(CLI::ExistingFile);
  compare->add_option("--metrics", metrics, "Metrics to compare (default: all of report A)")
      ->delimiter(',');
  compare->add_option("--out", compare_out, "Directory for compare.csv (default: print only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return run(bae::Command::simulate, args);
    if (train->parsed()) return run(bae::Command::train, args);
    if (oracle->parsed()) return run(bae::Command::oracle_study, args);
    if (eval->parsed()) return run(bae::Command::eval, args);
    if (tts->parsed()) return run(bae::Command::tts, args);
    if (compare->parsed()) {
      const auto rows = bae::compare_reports(bae::read_metric_report(report_a),
                                             bae::read_metric_report(report_b), metrics);
      const std::string csv = bae::comparison_to_csv(rows);
      std::cout << csv;
      if (!compare_out.empty()) {
        std::filesystem::create_directories(compare_out);
        std::ofstream out(std::filesystem::path(compare_out) / "compare.csv",
                          std::ios::binary);
        out << csv;
      }
      return 0;
    }
  } catch (const bae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bae::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
