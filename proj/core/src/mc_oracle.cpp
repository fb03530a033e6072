#include "bae/mc_oracle.hpp"

#include <cmath>

#include "bae/common.hpp"
#include "bae/parallel.hpp"

namespace bae {

std::string to_string(const StudyEstimator& estimator) {
  switch (estimator.kind) {
    case StudyEstimatorKind::none: return "none";
    case StudyEstimatorKind::batch_mean: return "batch_mean";
    case StudyEstimatorKind::group_mean: return "group_mean";
    case StudyEstimatorKind::outcome_conditioned: return "ocb";
    case StudyEstimatorKind::exact_value: return "exact";
  }
  return "?";
}

StudyEstimator study_estimator_from_string(const std::string& name) {
  if (name == "none") return {StudyEstimatorKind::none, 0.0};
  if (name == "batch_mean") return {StudyEstimatorKind::batch_mean, 0.0};
  if (name == "group_mean") return {StudyEstimatorKind::group_mean, 0.0};
  if (name == "ocb" || name == "outcome_conditioned")
    return {StudyEstimatorKind::outcome_conditioned, 0.0};
  if (name == "exact") return {StudyEstimatorKind::exact_value, 0.0};
  throw ConfigError("unknown estimator '" + name + "'");
}

double mc_conditional_value(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                            int answer, int c, RewardKind reward, int n_mc, RngStream rng) {
  if (n_mc < 1) throw ConfigError("n_mc must be >= 1");
  if (reward != RewardKind::brier && reward != RewardKind::bce)
    throw ConfigError("mc_conditional_value requires a brier or bce reward");
  double total = 0.0;
  for (int s = 0; s < n_mc; ++s) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(s));
    const int bin = sample_second_choice(env, policy, prompt_class, answer, sub);
    const double q = env.confidence_value(bin);
    total += reward == RewardKind::brier ? brier_reward(q, c) : bce_reward(q, c);
  }
  return total / static_cast<double>(n_mc);
}

namespace {

struct PromptWork {
  RolloutGroup group;
  int prompt_class = 0;
  std::vector<double> a_mc;
  std::vector<int> answers;
  std::vector<int> correctness;
};

BaselineKind to_baseline(const StudyEstimator& estimator) {
  switch (estimator.kind) {
    case StudyEstimatorKind::none: return BaselineKind::none();
    case StudyEstimatorKind::batch_mean: return BaselineKind::batch_mean();
    case StudyEstimatorKind::group_mean: return BaselineKind::group_mean();
    case StudyEstimatorKind::outcome_conditioned:
      return BaselineKind::outcome_conditioned(estimator.shrinkage);
    case StudyEstimatorKind::exact_value: break;
  }
  throw ContractError("estimator has no baseline form");
}

}  // namespace

StudyResult rmse_study(const EnvSpec& env, const TabularPolicy& policy, int prompts,
                       int group_size, int n_mc, const std::vector<StudyEstimator>& estimators,
                       RewardKind reward, RngStream rng, int threads) {
  if (prompts < 1) throw ConfigError("rmse_study needs at least one prompt");
  if (group_size < 2) throw ConfigError("rmse_study needs group_size >= 2");
  if (estimators.empty()) throw ConfigError("rmse_study needs at least one estimator");
  if (env.task != TaskKind::confidence)
    throw ConfigError("rmse_study requires the confidence task");

  const int num_classes = env.num_classes();
  std::vector<PromptWork> work(static_cast<std::size_t>(prompts));

  // Phase 1: sample groups and the Monte-Carlo reference advantages.
  parallel_for(0, prompts, threads, [&](int ip) {
    PromptWork& w = work[static_cast<std::size_t>(ip)];
    w.prompt_class = ip % num_classes;
    RngStream prompt_stream = rng.derive(static_cast<std::uint64_t>(ip));
    w.group = sample_group(env, policy, w.prompt_class, group_size,
                           "p" + std::to_string(ip), reward, prompt_stream.derive(0));
    RngStream mc_stream = prompt_stream.derive(1);
    w.a_mc.resize(static_cast<std::size_t>(group_size));
    w.answers.resize(static_cast<std::size_t>(group_size));
    w.correctness.resize(static_cast<std::size_t>(group_size));
    for (int i = 0; i < group_size; ++i) {
      const SegmentedRollout& rollout = w.group.rollouts[static_cast<std::size_t>(i)];
      const int answer = std::get<AnswerPayload>(rollout.blocks[0].payload).answer_id;
      const int c = rollout.outcomes.at(2).value == outcome::kCorrect ? 1 : 0;
      const double r2 = rollout.blocks[1].reward;
      w.answers[static_cast<std::size_t>(i)] = answer;
      w.correctness[static_cast<std::size_t>(i)] = c;
      w.a_mc[static_cast<std::size_t>(i)] =
          r2 - mc_conditional_value(env, policy, w.prompt_class, answer, c, reward, n_mc,
                                    mc_stream.derive(static_cast<std::uint64_t>(i)));
    }
  });

  // Phase 2: batch means over the whole study, then per-estimator proxies.
  std::vector<RolloutGroup> groups;
  groups.reserve(work.size());
  for (const PromptWork& w : work) groups.push_back(w.group);
  const std::vector<double> batch_means = batch_block_means(groups);

  struct Accumulator {
    long n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  std::vector<std::map<std::string, Accumulator>> acc(estimators.size());
  StudyResult result;

  for (int ip = 0; ip < prompts; ++ip) {
    const PromptWork& w = work[static_cast<std::size_t>(ip)];
    std::vector<std::vector<double>> proxies(estimators.size());
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      proxies[e].resize(static_cast<std::size_t>(group_size));
      if (estimators[e].kind == StudyEstimatorKind::exact_value) {
        for (int i = 0; i < group_size; ++i)
          proxies[e][static_cast<std::size_t>(i)] =
              w.group.rollouts[static_cast<std::size_t>(i)].blocks[1].reward -
              true_conditional_value(env, policy, w.prompt_class,
                                     w.answers[static_cast<std::size_t>(i)],
                                     w.correctness[static_cast<std::size_t>(i)], reward);
      } else {
        const AdvantageTable table = compute_blockwise_advantages(
            w.group, to_baseline(estimators[e]), NormalizationMode::center_only(), batch_means);
        for (int i = 0; i < group_size; ++i)
          proxies[e][static_cast<std::size_t>(i)] = table.at(i, 2);
      }
    }
    for (int i = 0; i < group_size; ++i) {
      const SegmentedRollout& rollout = w.group.rollouts[static_cast<std::size_t>(i)];
      StudyRow row;
      row.prompt_id = w.group.prompt_id;
      row.rollout_index = i;
      row.outcome = rollout.outcomes.at(2).value;
      row.reward = rollout.blocks[1].reward;
      row.a_mc = w.a_mc[static_cast<std::size_t>(i)];
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        const double proxy = proxies[e][static_cast<std::size_t>(i)];
        row.proxy.push_back(proxy);
        const double d = proxy - row.a_mc;
        Accumulator& a = acc[e][row.outcome];
        a.n += 1;
        a.sum += d;
        a.sum_sq += d * d;
      }
      result.rows.push_back(std::move(row));
    }
  }

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    OracleReport report;
    report.estimator = estimators[e];
    report.n_mc = n_mc;
    report.prompts = prompts;
    for (const auto& [label, a] : acc[e]) {
      StratumStats stats;
      stats.n = a.n;
      stats.bias = a.sum / static_cast<double>(a.n);
      stats.rmse = std::sqrt(a.sum_sq / static_cast<double>(a.n));
      report.strata[label] = stats;
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

}  // namespace bae
