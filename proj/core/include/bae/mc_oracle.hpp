#pragma once

#include <map>
#include <string>
#include <vector>

#include "bae/advantage.hpp"
#include "bae/env.hpp"
#include "bae/rng.hpp"

namespace bae {

// Proxy-advantage estimators under study: the four conditional baselines
// plus the closed-form conditional value (a meta-oracle that bounds what any
// estimator can achieve).
enum class StudyEstimatorKind { none, batch_mean, group_mean, outcome_conditioned, exact_value };

struct StudyEstimator {
  StudyEstimatorKind kind = StudyEstimatorKind::outcome_conditioned;
  double shrinkage = 0.0;  // outcome_conditioned only
};

std::string to_string(const StudyEstimator& estimator);
StudyEstimator study_estimator_from_string(const std::string& name);

// Monte-Carlo estimate of E[r_2 | class, answer, c]: the mean reward over
// n_mc confidence-block rollouts from the fixed prefix.
double mc_conditional_value(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                            int answer, int c, RewardKind reward, int n_mc, RngStream rng);

struct StratumStats {
  long n = 0;
  double rmse = 0.0;
  double bias = 0.0;  // mean(proxy - A_MC)
};

struct OracleReport {
  StudyEstimator estimator;
  std::map<std::string, StratumStats> strata;  // empty strata are absent
  int n_mc = 0;
  int prompts = 0;
};

// Per-rollout dump row for error-distribution plots.
struct StudyRow {
  std::string prompt_id;
  int rollout_index = 0;
  std::string outcome;
  double reward = 0.0;
  double a_mc = 0.0;
  std::vector<double> proxy;  // parallel to the estimator list
};

struct StudyResult {
  std::vector<OracleReport> reports;
  std::vector<StudyRow> rows;
};

// For each prompt: sample a group, estimate each rollout's reference
// advantage A_MC = r_2 - MC value of its prefix, compute every estimator's
// block-2 proxy advantage, and aggregate RMSE and bias per correctness
// stratum. Prompt classes cycle round-robin over the environment's classes.
StudyResult rmse_study(const EnvSpec& env, const TabularPolicy& policy, int prompts,
                       int group_size, int n_mc, const std::vector<StudyEstimator>& estimators,
                       RewardKind reward, RngStream rng, int threads = 1);

}  // namespace bae
