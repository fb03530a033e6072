#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bae/rewards.hpp"
#include "bae/rng.hpp"
#include "bae/rollout.hpp"

namespace bae {

enum class TaskKind { confidence, two_attempt };

std::string to_string(TaskKind task);
TaskKind task_kind_from_string(const std::string& name);

// Synthetic segmented-generation environment. A completion has two blocks:
// a solution block that selects an answer, followed by either a confidence
// report (confidence task) or a second solution attempt (two_attempt task).
// Answer `abstain_answer` never succeeds; the remaining answers succeed with
// the per-(class, answer) probabilities in `success_prob`, which default to
// the class difficulty.
struct EnvSpec {
  TaskKind task = TaskKind::confidence;
  std::vector<double> class_difficulty;           // per prompt class, in [0, 1]
  int num_answers = 3;                            // M >= 2, including abstain
  int abstain_answer = 2;                         // index of the abstain answer
  std::vector<std::vector<double>> success_prob;  // [class][answer]
  int confidence_levels = 11;                     // B >= 2 grid points on [0, 1]
  int tokens_per_block = 1;                       // L >= 1

  int num_classes() const { return static_cast<int>(class_difficulty.size()); }
  // Number of distinct choices the second block decodes to.
  int second_choice_count() const {
    return task == TaskKind::confidence ? confidence_levels : num_answers;
  }
  int first_digit_base() const;
  int second_digit_base() const;
  int vocab_size() const;
  double confidence_value(int bin) const {
    return static_cast<double>(bin) / static_cast<double>(confidence_levels - 1);
  }

  std::vector<std::string> validate() const;
  void check_valid() const;  // throws ConfigError with all violations

  static EnvSpec confidence_task(std::vector<double> difficulties, int num_answers,
                                 int confidence_levels, int tokens_per_block = 1);
  static EnvSpec two_attempt_task(std::vector<double> difficulties, int num_answers,
                                  int tokens_per_block = 1);
  // Replaces the derived success table (e.g. to vary success per answer).
  EnvSpec& with_success_prob(std::vector<std::vector<double>> table);
};

// Smallest base D with D^tokens >= choices; a block's choice is written as
// `tokens` base-D digits, least significant first.
int digit_base_for(int choices, int tokens);

// Decodes a digit string back to a choice id; values beyond `choices`
// wrap modulo `choices`.
int decode_choice(std::span<const int> tokens, int base, int choices);

// Softmax policy over block tokens. The first block's digit distributions
// are indexed by (prompt class, position); the second block's are indexed by
// (prompt class, decoded first choice, position). A snapshot of the
// behavior-policy parameters is kept alongside the live ones.
class TabularPolicy {
 public:
  explicit TabularPolicy(const EnvSpec& env);

  static TabularPolicy uniform(const EnvSpec& env) { return TabularPolicy(env); }
  // Confidence task only: solution logits stay uniform while confidence
  // logits peak around each context's true success probability; larger
  // sharpness concentrates the confidence distribution.
  static TabularPolicy calibrated(const EnvSpec& env, double sharpness);

  int num_classes() const { return num_classes_; }
  int tokens_per_block() const { return tokens_per_block_; }
  int first_digit_base() const { return first_base_; }
  int second_digit_base() const { return second_base_; }
  int first_choice_count() const { return first_choices_; }
  int second_choice_count() const { return second_choices_; }

  int param_count() const { return static_cast<int>(params_.size()); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<const double> old_params() const { return old_params_; }
  void snapshot_old() { old_params_ = params_; }

  int first_block_offset(int cls, int pos) const;
  int second_block_offset(int cls, int first_choice, int pos) const;

  // Distribution over the `width` symbols of the slice at `offset`.
  std::vector<double> probs_at(int offset, int width, bool use_old) const;
  double log_prob_at(int offset, int width, int symbol, bool use_old) const;

  bool shape_matches(const EnvSpec& env) const;

 private:
  std::span<const double> raw(bool use_old) const { return use_old ? old_params_ : params_; }

  int num_classes_, tokens_per_block_;
  int first_base_, second_base_;
  int first_choices_, second_choices_;
  int second_table_offset_;
  std::vector<double> params_;
  std::vector<double> old_params_;
};

// Parameter slice behind one sampled token, plus the symbol that was drawn.
struct TokenSlice {
  int block_k;  // 1-based
  int position;
  int offset;
  int width;
  int symbol;
};

// Walks every token of a rollout in order, reporting the policy slice it was
// drawn from. The second block's slice depends on the decoded first-block
// choice, which is recovered from the stored tokens.
void for_each_token_slice(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                          const SegmentedRollout& rollout,
                          const std::function<void(const TokenSlice&)>& fn);

// Draws G rollouts for one prompt of the given class. Token logprobs are
// recorded under the live parameters for both logprob_old and logprob_new
// (sampling is on-policy); rewards are filled per `reward`; the block-2
// outcome is the first block's correctness.
RolloutGroup sample_group(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                          int group_size, const std::string& prompt_id, RewardKind reward,
                          RngStream rng);

// Samples just the second block's decoded choice from a fixed prefix
// (prompt class, first choice); used by the Monte-Carlo value oracle.
int sample_second_choice(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                         int first_choice, RngStream& rng);

// Exact distribution over decoded choices for the first / second block.
std::vector<double> first_choice_pmf(const EnvSpec& env, const TabularPolicy& policy,
                                     int prompt_class, bool use_old = false);
std::vector<double> second_choice_pmf(const EnvSpec& env, const TabularPolicy& policy,
                                      int prompt_class, int first_choice, bool use_old = false);

// Closed-form E[r_2 | class, answer, c] for the confidence task under the
// policy's current confidence distribution; reward must be brier or bce.
double true_conditional_value(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                              int answer, int c, RewardKind reward);

// Copy of the group with logprob_new recomputed from the live parameters
// (logprob_old untouched); makes the surrogate losses functions of the
// current policy.
RolloutGroup refresh_new_logprobs(const EnvSpec& env, const TabularPolicy& policy,
                                  int prompt_class, const RolloutGroup& group);

// Expected first-block accuracy under the policy and the true success
// probabilities, averaged over prompt classes.
double exact_first_attempt_accuracy(const EnvSpec& env, const TabularPolicy& policy);
// Two-attempt task: expected second-attempt accuracy.
double exact_second_attempt_accuracy(const EnvSpec& env, const TabularPolicy& policy);

nlohmann::json env_to_json(const EnvSpec& env);
EnvSpec env_from_json(const nlohmann::json& j);
nlohmann::json policy_to_json(const EnvSpec& env, const TabularPolicy& policy);
std::pair<EnvSpec, TabularPolicy> policy_from_json(const nlohmann::json& j);

}  // namespace bae
