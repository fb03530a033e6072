#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bae/advantage.hpp"
#include "bae/env.hpp"
#include "bae/objective.hpp"
#include "bae/rng.hpp"

namespace bae {

enum class ObjectiveKind { bae, grpo };
enum class EntropyRule { proportional, off };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& name);
EntropyRule entropy_rule_from_string(const std::string& name);

// Hyperparameters for the toy trainer: plain gradient ascent on the clipped
// surrogate plus a dynamically weighted entropy bonus, one update per batch,
// behavior snapshot refreshed every step.
struct TrainerConfig {
  int group_size = 32;  // G >= 2
  int batch_prompts = 8;
  double learning_rate = 0.1;
  int steps = 1000;
  double eps_clip = 0.2;
  double beta_kl = 0.0;  // KL against the initial policy when > 0
  EntropyRule entropy_rule = EntropyRule::proportional;
  double entropy_target = 0.2;  // nats
  double entropy_step = 5e-4;   // controller gain
  double entropy_coeff_init = 0.0;
  double entropy_coeff_min = 0.0;
  double entropy_coeff_max = 0.05;
  NormalizationMode normalization = NormalizationMode::center_only();
  BaselineKind baseline = BaselineKind::outcome_conditioned();
  RewardKind reward = RewardKind::brier;
  ObjectiveKind objective = ObjectiveKind::bae;
  int probe_size = 256;  // held-out rollouts for the per-step ECE probe

  void check_valid(const EnvSpec& env) const;
};

// Clamped proportional controller on the entropy gap: the bonus grows while
// measured entropy sits below target.
double entropy_coefficient_update(double coeff, double measured_entropy, double target,
                                  double step, double coeff_min, double coeff_max);

struct AdvantageStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct StepReport {
  int step = 0;
  double loss = 0.0;
  double mean_entropy = 0.0;
  double entropy_coeff = 0.0;
  std::vector<double> mean_block_reward;
  std::vector<AdvantageStats> advantage_stats;  // per block (one entry for grpo)
  std::optional<double> probe_ece;
};

// Owns the policy being trained and the derived RNG streams. Deterministic
// given (env, config, seed) for any thread count.
class Trainer {
 public:
  Trainer(EnvSpec env, TrainerConfig config, std::uint64_t seed, int threads = 1);

  StepReport step();
  std::vector<StepReport> run();  // config.steps steps

  const EnvSpec& env() const { return env_; }
  const TabularPolicy& policy() const { return policy_; }
  TabularPolicy& policy() { return policy_; }
  double entropy_coeff() const { return entropy_coeff_; }
  int steps_done() const { return steps_done_; }

 private:
  std::optional<double> probe_ece(int step_index);

  EnvSpec env_;
  TrainerConfig config_;
  int threads_;
  RngStream root_;
  TabularPolicy policy_;
  std::unique_ptr<TabularPolicy> reference_;  // initial policy, for the KL arm
  double entropy_coeff_;
  int steps_done_ = 0;
};

}  // namespace bae
