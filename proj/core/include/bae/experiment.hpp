#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bae/config.hpp"

namespace bae {

enum class Command { simulate, train, oracle_study, eval, tts };

std::string to_string(Command cmd);
Command command_from_string(const std::string& name);

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::string out_dir;  // empty: config `out_dir`, default "out"
  int threads = 1;
};

// Executes one command deterministically: every output file embeds
// (config hash, master seed, tool version) and depends only on those plus
// the config. Throws ConfigError for bad configs and NumericError for
// non-finite numerics mid-run.
void run_command(Command cmd, const KeyValueConfig& config, const RunOptions& opts);
void run_command_from_file(Command cmd, const std::string& config_path, const RunOptions& opts);

// One row of a metric report file; `value`/`sem` are empty for metrics that
// were undefined on the data (e.g. single-class AUROC).
struct MetricRow {
  std::string metric;
  std::optional<double> value;
  std::optional<double> sem;
  long n = 0;
  std::string config_hash;
};

std::vector<MetricRow> read_metric_report(const std::string& path);

struct ComparisonRow {
  std::string metric;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> delta;  // b - a
  bool significant = false;     // |delta| > 2 (sem_a + sem_b)
};

// Side-by-side deltas for two metric reports. `metrics` empty means every
// metric of report A; a metric missing from either report is a schema error.
std::vector<ComparisonRow> compare_reports(const std::vector<MetricRow>& a,
                                           const std::vector<MetricRow>& b,
                                           const std::vector<std::string>& metrics = {});

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows);

}  // namespace bae
