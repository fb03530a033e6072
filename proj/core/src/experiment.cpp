#include "bae/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bae/common.hpp"
#include "bae/env.hpp"
#include "bae/evalkit.hpp"
#include "bae/mc_oracle.hpp"
#include "bae/parallel.hpp"
#include "bae/trainer.hpp"

namespace bae {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Command cmd) {
  switch (cmd) {
    case Command::simulate: return "simulate";
    case Command::train: return "train";
    case Command::oracle_study: return "oracle-study";
    case Command::eval: return "eval";
    case Command::tts: return "tts";
  }
  return "?";
}

Command command_from_string(const std::string& name) {
  if (name == "simulate") return Command::simulate;
  if (name == "train") return Command::train;
  if (name == "oracle-study") return Command::oracle_study;
  if (name == "eval") return Command::eval;
  if (name == "tts") return Command::tts;
  throw ConfigError("unknown command '" + name + "'");
}

namespace {

// Shortest round-trip decimal form; deterministic for equal doubles.
std::string fmt(double x) { return json(x).dump(); }

struct RunContext {
  std::uint64_t seed = 0;
  std::string hash;
  fs::path out_dir;
  int threads = 1;
};

std::ofstream open_output(const RunContext& ctx, const std::string& name) {
  fs::create_directories(ctx.out_dir);
  std::ofstream out(ctx.out_dir / name, std::ios::binary);
  if (!out) throw ConfigError("cannot write to '" + (ctx.out_dir / name).string() + "'");
  return out;
}

void write_jsonl_meta(std::ofstream& out, const RunContext& ctx) {
  out << json{{"type", "meta"},
              {"config_hash", ctx.hash},
              {"seed", ctx.seed},
              {"version", std::string(kVersion)}}
             .dump()
      << "\n";
}

void write_csv_meta(std::ofstream& out, const RunContext& ctx) {
  out << "# config_hash=" << ctx.hash << " seed=" << ctx.seed << " version=" << kVersion
      << "\n";
}

EnvSpec parse_env(const KeyValueConfig& cfg) {
  const TaskKind task = task_kind_from_string(cfg.get_string("env.task", "confidence"));
  const std::vector<double> difficulties = cfg.get_double_list("env.difficulties", {0.5});
  const int answers = static_cast<int>(cfg.get_int("env.answers", 3));
  const int levels = static_cast<int>(cfg.get_int("env.confidence_levels", 11));
  const int tokens = static_cast<int>(cfg.get_int("env.tokens_per_block", 1));
  EnvSpec env = task == TaskKind::confidence
                    ? EnvSpec::confidence_task(difficulties, answers, levels, tokens)
                    : EnvSpec::two_attempt_task(difficulties, answers, tokens);
  if (auto table = cfg.get_matrix("env.success_probs")) env.with_success_prob(*table);
  return env;
}

// `<section>.policy` is uniform, calibrated, or a policy snapshot path. The
// snapshot carries its own environment; env.* keys are parsed otherwise.
std::pair<EnvSpec, TabularPolicy> parse_policy(const KeyValueConfig& cfg,
                                               const std::string& section) {
  const std::string choice = cfg.get_string(section + ".policy", "uniform");
  if (choice == "uniform") {
    EnvSpec env = parse_env(cfg);
    cfg.get_double(section + ".sharpness", 8.0);  // accepted but unused here
    return {env, TabularPolicy::uniform(env)};
  }
  if (choice == "calibrated") {
    EnvSpec env = parse_env(cfg);
    const double sharpness = cfg.get_double(section + ".sharpness", 8.0);
    return {env, TabularPolicy::calibrated(env, sharpness)};
  }
  std::ifstream in(choice);
  if (!in) throw ConfigError("key '" + section + ".policy': cannot read snapshot '" + choice +
                             "' (expected uniform, calibrated, or a file path)");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("policy snapshot '" + choice + "' is not valid JSON: " + e.what());
  }
  return policy_from_json(j);
}

RewardKind parse_reward(const KeyValueConfig& cfg, const std::string& key, const EnvSpec& env) {
  const std::string fallback =
      env.task == TaskKind::two_attempt ? "two_attempt" : "brier";
  return reward_kind_from_string(cfg.get_string(key, fallback));
}

NormalizationMode parse_normalization(const KeyValueConfig& cfg, const std::string& key) {
  const std::string name = cfg.get_string(key, "center");
  if (name == "center") return NormalizationMode::center_only();
  if (name == "center_scale") return NormalizationMode::center_and_scale();
  throw ConfigError("key '" + key + "': expected center or center_scale, got '" + name + "'");
}

BaselineKind parse_baseline(const KeyValueConfig& cfg, const std::string& section) {
  BaselineKind kind;
  kind.variant = baseline_variant_from_string(cfg.get_string(section + ".baseline", "ocb"));
  kind.shrinkage = cfg.get_double(section + ".ocb_shrinkage", 0.0);
  return kind;
}

// ---------------------------------------------------------------------------
// simulate

void cmd_simulate(const KeyValueConfig& cfg, const RunContext& ctx) {
  EnvSpec env;
  TabularPolicy policy(EnvSpec::confidence_task({0.5}, 2, 2));
  std::tie(env, policy) = parse_policy(cfg, "sim");
  const int prompts = static_cast<int>(cfg.get_int("sim.prompts", 4));
  const int group_size = static_cast<int>(cfg.get_int("sim.group_size", 8));
  const RewardKind reward = parse_reward(cfg, "sim.reward", env);
  const BaselineKind baseline = parse_baseline(cfg, "sim");
  const NormalizationMode mode = parse_normalization(cfg, "sim.normalization");
  if (prompts < 1 || group_size < 1) throw ConfigError("sim.prompts and sim.group_size must be >= 1");
  cfg.require_all_consumed();

  RngStream root(ctx.seed);
  std::vector<RolloutGroup> groups(static_cast<std::size_t>(prompts));
  parallel_for(0, prompts, ctx.threads, [&](int p) {
    groups[static_cast<std::size_t>(p)] =
        sample_group(env, policy, p % env.num_classes(), group_size, "p" + std::to_string(p),
                     reward, root.derive(static_cast<std::uint64_t>(p)));
  });

  std::ofstream log = open_output(ctx, "rollouts.jsonl");
  write_jsonl_meta(log, ctx);
  for (const RolloutGroup& group : groups)
    for (const SegmentedRollout& rollout : group.rollouts)
      log << rollout_to_log_line(rollout) << "\n";

  const std::vector<double> batch_means = batch_block_means(groups);
  std::ofstream dump = open_output(ctx, "advantages.jsonl");
  write_jsonl_meta(dump, ctx);
  for (const RolloutGroup& group : groups) {
    AdvantageTable baselines;
    const AdvantageTable table =
        compute_blockwise_advantages(group, baseline, mode, batch_means, &baselines);
    for (int i = 0; i < group.size(); ++i) {
      const SegmentedRollout& rollout = group.rollouts[static_cast<std::size_t>(i)];
      for (int k = 1; k <= group.num_blocks(); ++k) {
        json row{{"prompt_id", group.prompt_id},
                 {"i", i},
                 {"k", k},
                 {"reward", rollout.blocks[static_cast<std::size_t>(k - 1)].reward},
                 {"baseline", baselines.at(i, k)},
                 {"advantage", table.at(i, k)},
                 {"outcome", k > 1 ? rollout.outcomes.at(k).value : std::string()}};
        dump << row.dump() << "\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// train

json step_report_to_json(const StepReport& report) {
  json stats = json::array();
  for (const AdvantageStats& s : report.advantage_stats)
    stats.push_back(json{{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}});
  json j{{"step", report.step},
         {"loss", report.loss},
         {"entropy", report.mean_entropy},
         {"entropy_coeff", report.entropy_coeff},
         {"mean_block_reward", report.mean_block_reward},
         {"advantage_stats", std::move(stats)}};
  if (report.probe_ece) j["probe_ece"] = *report.probe_ece;
  return j;
}

TrainerConfig parse_trainer(const KeyValueConfig& cfg, const EnvSpec& env) {
  TrainerConfig t;
  t.group_size = static_cast<int>(cfg.get_int("trainer.group_size", t.group_size));
  t.batch_prompts = static_cast<int>(cfg.get_int("trainer.batch_prompts", t.batch_prompts));
  t.learning_rate = cfg.get_double("trainer.learning_rate", t.learning_rate);
  t.steps = static_cast<int>(cfg.get_int("trainer.steps", t.steps));
  t.eps_clip = cfg.get_double("trainer.eps_clip", t.eps_clip);
  t.beta_kl = cfg.get_double("trainer.beta_kl", t.beta_kl);
  t.entropy_rule =
      entropy_rule_from_string(cfg.get_string("trainer.entropy_rule", "proportional"));
  t.entropy_target = cfg.get_double("trainer.entropy_target", t.entropy_target);
  t.entropy_step = cfg.get_double("trainer.entropy_step", t.entropy_step);
  t.entropy_coeff_init = cfg.get_double("trainer.entropy_coeff_init", t.entropy_coeff_init);
  t.entropy_coeff_min = cfg.get_double("trainer.entropy_coeff_min", t.entropy_coeff_min);
  t.entropy_coeff_max = cfg.get_double("trainer.entropy_coeff_max", t.entropy_coeff_max);
  t.normalization = parse_normalization(cfg, "trainer.normalization");
  t.baseline = parse_baseline(cfg, "trainer");
  t.reward = parse_reward(cfg, "trainer.reward", env);
  t.objective = objective_kind_from_string(cfg.get_string("trainer.objective", "bae"));
  t.probe_size = static_cast<int>(cfg.get_int("trainer.probe_size", t.probe_size));
  return t;
}

void cmd_train(const KeyValueConfig& cfg, const RunContext& ctx) {
  const EnvSpec env = parse_env(cfg);
  const TrainerConfig tcfg = parse_trainer(cfg, env);
  tcfg.check_valid(env);
  cfg.require_all_consumed();

  Trainer trainer(env, tcfg, ctx.seed, ctx.threads);
  std::ofstream report = open_output(ctx, "training_report.jsonl");
  write_jsonl_meta(report, ctx);
  for (int s = 0; s < tcfg.steps; ++s)
    report << step_report_to_json(trainer.step()).dump() << "\n";

  json snapshot = policy_to_json(env, trainer.policy());
  snapshot["config_hash"] = ctx.hash;
  snapshot["seed"] = ctx.seed;
  snapshot["version"] = std::string(kVersion);
  std::ofstream policy_file = open_output(ctx, "policy.json");
  policy_file << snapshot.dump() << "\n";
}

// ---------------------------------------------------------------------------
// oracle-study

void cmd_oracle_study(const KeyValueConfig& cfg, const RunContext& ctx) {
  EnvSpec env;
  TabularPolicy policy(EnvSpec::confidence_task({0.5}, 2, 2));
  std::tie(env, policy) = parse_policy(cfg, "oracle");
  const int prompts = static_cast<int>(cfg.get_int("oracle.prompts", 100));
  const int group_size = static_cast<int>(cfg.get_int("oracle.group_size", 32));
  const int n_mc = static_cast<int>(cfg.get_int("oracle.n_mc", 32));
  const RewardKind reward =
      reward_kind_from_string(cfg.get_string("oracle.reward", "brier"));
  std::vector<StudyEstimator> estimators;
  for (const std::string& name :
       cfg.get_string_list("oracle.estimators", {"group_mean", "batch_mean", "ocb"}))
    estimators.push_back(study_estimator_from_string(name));
  cfg.require_all_consumed();

  const StudyResult result = rmse_study(env, policy, prompts, group_size, n_mc, estimators,
                                        reward, RngStream(ctx.seed), ctx.threads);

  std::ofstream table = open_output(ctx, "rmse_table.csv");
  write_csv_meta(table, ctx);
  table << "estimator,stratum,n,rmse,bias\n";
  for (const OracleReport& report : result.reports)
    for (const auto& [stratum, stats] : report.strata)
      table << to_string(report.estimator) << "," << stratum << "," << stats.n << ","
            << fmt(stats.rmse) << "," << fmt(stats.bias) << "\n";

  std::ofstream dump = open_output(ctx, "oracle_rollouts.jsonl");
  write_jsonl_meta(dump, ctx);
  for (const StudyRow& row : result.rows) {
    json proxies = json::object();
    for (std::size_t e = 0; e < estimators.size(); ++e)
      proxies[to_string(estimators[e])] = row.proxy[e];
    dump << json{{"prompt_id", row.prompt_id},
                 {"i", row.rollout_index},
                 {"outcome", row.outcome},
                 {"reward", row.reward},
                 {"a_mc", row.a_mc},
                 {"proxy", std::move(proxies)}}
                .dump()
         << "\n";
  }
}

// ---------------------------------------------------------------------------
// eval and tts share candidate sampling

// Samples `n` candidates per prompt. Correctness comes from a per-prompt
// realized answer key, so equal answers on one prompt share one verdict (the
// shared-verifier invariant of test-time sample sets).
std::vector<PromptSamples> sample_eval_set(const EnvSpec& env, const TabularPolicy& policy,
                                           int prompts, int n, RngStream root, int threads) {
  if (env.task != TaskKind::confidence)
    throw ConfigError("eval and tts require the confidence task");
  std::vector<PromptSamples> set(static_cast<std::size_t>(prompts));
  parallel_for(0, prompts, threads, [&](int p) {
    const int cls = p % env.num_classes();
    RngStream prompt_stream = root.derive(static_cast<std::uint64_t>(p));
    RngStream key_stream = prompt_stream.derive(0);
    std::vector<int> answer_key(static_cast<std::size_t>(env.num_answers));
    for (int a = 0; a < env.num_answers; ++a)
      answer_key[static_cast<std::size_t>(a)] =
          key_stream.next_bernoulli(
              env.success_prob[static_cast<std::size_t>(cls)][static_cast<std::size_t>(a)])
              ? 1
              : 0;
    PromptSamples& samples = set[static_cast<std::size_t>(p)];
    samples.prompt_id = "p" + std::to_string(p);
    RngStream cand_stream = prompt_stream.derive(1);
    for (int m = 0; m < n; ++m) {
      RngStream sub = cand_stream.derive(static_cast<std::uint64_t>(m));
      // Candidate sampling mirrors one rollout: answer tokens then
      // confidence tokens from the answer's context.
      const RolloutGroup group = sample_group(env, policy, cls, 1, samples.prompt_id,
                                              RewardKind::rlvr, sub);
      const SegmentedRollout& rollout = group.rollouts.front();
      const int answer = std::get<AnswerPayload>(rollout.blocks[0].payload).answer_id;
      const double q = std::get<ConfidencePayload>(rollout.blocks[1].payload).q;
      samples.candidates.push_back(
          Candidate{answer, q, answer_key[static_cast<std::size_t>(answer)]});
    }
  });
  return set;
}

void write_metric_row(std::ofstream& out, const std::string& name, std::optional<double> value,
                      std::optional<double> sem, long n, const std::string& hash) {
  out << name << "," << (value ? fmt(*value) : "undefined") << ","
      << (sem ? fmt(*sem) : "undefined") << "," << n << "," << hash << "\n";
}

void cmd_eval(const KeyValueConfig& cfg, const RunContext& ctx) {
  EnvSpec env;
  TabularPolicy policy(EnvSpec::confidence_task({0.5}, 2, 2));
  std::tie(env, policy) = parse_policy(cfg, "eval");
  const int prompts = static_cast<int>(cfg.get_int("eval.prompts", 200));
  const int n = static_cast<int>(cfg.get_int("eval.samples_per_prompt", 8));
  const int iterations = static_cast<int>(cfg.get_int("eval.bootstrap_iterations", 1000));
  if (prompts < 1 || n < 1) throw ConfigError("eval.prompts and eval.samples_per_prompt must be >= 1");
  cfg.require_all_consumed();

  RngStream root(ctx.seed);
  const std::vector<PromptSamples> set =
      sample_eval_set(env, policy, prompts, n, root.derive(0), ctx.threads);

  std::vector<CalibrationRecord> records;
  records.reserve(static_cast<std::size_t>(prompts) * n);
  std::vector<std::vector<int>> evaluations(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m)
    evaluations[static_cast<std::size_t>(m)].reserve(static_cast<std::size_t>(prompts));
  double correct = 0.0;
  for (const PromptSamples& samples : set) {
    for (int m = 0; m < n; ++m) {
      const Candidate& cand = samples.candidates[static_cast<std::size_t>(m)];
      records.push_back(CalibrationRecord{cand.q, cand.c});
      evaluations[static_cast<std::size_t>(m)].push_back(cand.c);
      correct += cand.c;
    }
  }
  const double acc = correct / static_cast<double>(records.size());

  RngStream boot = root.derive(1);
  const auto sem_ece =
      bootstrap_sem(records, CalibrationMetric::ece, iterations, boot.derive(0), ctx.threads);
  const auto sem_brier =
      bootstrap_sem(records, CalibrationMetric::brier, iterations, boot.derive(1), ctx.threads);
  const auto sem_auroc =
      bootstrap_sem(records, CalibrationMetric::auroc, iterations, boot.derive(2), ctx.threads);

  std::ofstream out = open_output(ctx, "metrics.csv");
  write_csv_meta(out, ctx);
  out << "metric,value,sem,n,config_hash\n";
  const long n_records = static_cast<long>(records.size());
  write_metric_row(out, "acc", acc, pass1_sem(evaluations), n, ctx.hash);
  write_metric_row(out, "auroc", auroc(records), sem_auroc, n_records, ctx.hash);
  write_metric_row(out, "ece", ece(records), sem_ece, n_records, ctx.hash);
  write_metric_row(out, "brier", brier_score(records), sem_brier, n_records, ctx.hash);
}

void cmd_tts(const KeyValueConfig& cfg, const RunContext& ctx) {
  EnvSpec env;
  TabularPolicy policy(EnvSpec::confidence_task({0.5}, 2, 2));
  std::tie(env, policy) = parse_policy(cfg, "tts");
  const int prompts = static_cast<int>(cfg.get_int("tts.prompts", 200));
  const int max_samples = static_cast<int>(cfg.get_int("tts.max_samples", 16));
  const std::vector<int> grid = cfg.get_int_list("tts.grid", {1, 2, 4, 8, 16});
  if (prompts < 1 || max_samples < 1)
    throw ConfigError("tts.prompts and tts.max_samples must be >= 1");
  for (int n : grid)
    if (n < 1 || n > max_samples)
      throw ConfigError("tts.grid values must lie in [1, tts.max_samples]");
  cfg.require_all_consumed();

  RngStream root(ctx.seed);
  const std::vector<PromptSamples> set =
      sample_eval_set(env, policy, prompts, max_samples, root.derive(0), ctx.threads);

  std::ofstream out = open_output(ctx, "tts_curves.csv");
  write_csv_meta(out, ctx);
  out << "strategy,n,accuracy,sem\n";
  auto emit = [&](const std::string& strategy, int n, double accuracy,
                  std::optional<double> sem) {
    out << strategy << "," << n << "," << fmt(accuracy) << ","
        << (sem ? fmt(*sem) : "undefined") << "\n";
  };

  // Pass@1: every candidate position is one evaluation.
  {
    std::vector<std::vector<int>> evaluations(static_cast<std::size_t>(max_samples));
    double correct = 0.0;
    for (const PromptSamples& samples : set)
      for (int m = 0; m < max_samples; ++m) {
        const int c = samples.candidates[static_cast<std::size_t>(m)].c;
        evaluations[static_cast<std::size_t>(m)].push_back(c);
        correct += c;
      }
    emit("pass1", 1, correct / static_cast<double>(prompts * max_samples),
         pass1_sem(evaluations));
  }

  // Pass@k from the combinatorial estimator; SEM across prompts.
  for (int k : grid) {
    std::vector<double> per_prompt;
    per_prompt.reserve(set.size());
    for (const PromptSamples& samples : set) {
      int c_correct = 0;
      for (const Candidate& cand : samples.candidates) c_correct += cand.c;
      per_prompt.push_back(pass_at_k(max_samples, c_correct, k));
    }
    double mean = 0.0;
    for (double v : per_prompt) mean += v;
    mean /= static_cast<double>(per_prompt.size());
    double ss = 0.0;
    for (double v : per_prompt) ss += (v - mean) * (v - mean);
    const double sem = per_prompt.size() > 1
                           ? std::sqrt(ss / static_cast<double>(per_prompt.size() - 1)) /
                                 std::sqrt(static_cast<double>(per_prompt.size()))
                           : 0.0;
    emit("passk", k, mean, sem);
  }

  // Aggregation strategies: disjoint chunks of n candidates form the
  // combination-level evaluations.
  for (AggregationStrategy strategy :
       {AggregationStrategy::majority, AggregationStrategy::max_confidence,
        AggregationStrategy::weighted_majority}) {
    for (int n : grid) {
      const int chunks = max_samples / n;
      std::vector<std::vector<int>> evaluations(static_cast<std::size_t>(chunks));
      double correct = 0.0;
      for (const PromptSamples& samples : set) {
        for (int r = 0; r < chunks; ++r) {
          const std::span<const Candidate> window(samples.candidates.data() +
                                                      static_cast<std::size_t>(r) * n,
                                                  static_cast<std::size_t>(n));
          const int chosen = aggregate(window, strategy);
          int c = 0;
          for (const Candidate& cand : window)
            if (cand.answer_id == chosen) {
              c = cand.c;
              break;
            }
          evaluations[static_cast<std::size_t>(r)].push_back(c);
          correct += c;
        }
      }
      emit(to_string(strategy), n, correct / static_cast<double>(prompts * chunks),
           pass1_sem(evaluations));
    }
  }
}

}  // namespace

void run_command(Command cmd, const KeyValueConfig& config, const RunOptions& opts) {
  RunContext ctx;
  ctx.seed = opts.seed_override.value_or(config.get_u64("seed", 0));
  ctx.hash = config_hash(to_string(cmd), config, ctx.seed);
  const std::string out_dir =
      !opts.out_dir.empty() ? opts.out_dir : config.get_string("out_dir", "out");
  ctx.out_dir = out_dir;
  ctx.threads = std::max(1, opts.threads);

  switch (cmd) {
    case Command::simulate: cmd_simulate(config, ctx); break;
    case Command::train: cmd_train(config, ctx); break;
    case Command::oracle_study: cmd_oracle_study(config, ctx); break;
    case Command::eval: cmd_eval(config, ctx); break;
    case Command::tts: cmd_tts(config, ctx); break;
  }
}

void run_command_from_file(Command cmd, const std::string& config_path, const RunOptions& opts) {
  run_command(cmd, KeyValueConfig::from_file(config_path), opts);
}

std::vector<MetricRow> read_metric_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read metric report '" + path + "'");
  std::vector<MetricRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "metric,value,sem,n,config_hash")
        throw ConfigError("'" + path + "' is not a metric report (bad header)");
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string metric, value, sem, n, hash;
    if (!std::getline(fields, metric, ',') || !std::getline(fields, value, ',') ||
        !std::getline(fields, sem, ',') || !std::getline(fields, n, ',') ||
        !std::getline(fields, hash))
      throw ConfigError("'" + path + "' has a malformed row: " + line);
    MetricRow row;
    row.metric = metric;
    if (value != "undefined") row.value = std::stod(value);
    if (sem != "undefined") row.sem = std::stod(sem);
    row.n = std::stol(n);
    row.config_hash = hash;
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ConfigError("'" + path + "' is not a metric report (no header)");
  return rows;
}

std::vector<ComparisonRow> compare_reports(const std::vector<MetricRow>& a,
                                           const std::vector<MetricRow>& b,
                                           const std::vector<std::string>& metrics) {
  auto find = [](const std::vector<MetricRow>& rows, const std::string& name) {
    for (const MetricRow& row : rows)
      if (row.metric == name) return &row;
    return static_cast<const MetricRow*>(nullptr);
  };

  std::vector<std::string> selected = metrics;
  if (selected.empty())
    for (const MetricRow& row : a) selected.push_back(row.metric);

  std::vector<ComparisonRow> out;
  for (const std::string& name : selected) {
    const MetricRow* ra = find(a, name);
    const MetricRow* rb = find(b, name);
    if (!ra || !rb)
      throw ConfigError("metric '" + name + "' is missing from " +
                        (!ra ? "report A" : "report B") + " (reports must share a schema)");
    ComparisonRow row;
    row.metric = name;
    row.a = ra->value;
    row.b = rb->value;
    if (ra->value && rb->value) {
      row.delta = *rb->value - *ra->value;
      if (ra->sem && rb->sem)
        row.significant = std::fabs(*row.delta) > 2.0 * (*ra->sem + *rb->sem);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string comparison_to_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "metric,a,b,delta,significant\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v).dump() : std::string("undefined");
  };
  for (const ComparisonRow& row : rows)
    out << row.metric << "," << opt(row.a) << "," << opt(row.b) << "," << opt(row.delta) << ","
        << (row.significant ? "yes" : "no") << "\n";
  return out.str();
}

}  // namespace bae
