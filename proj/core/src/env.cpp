#include "bae/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "bae/common.hpp"

namespace bae {

std::string to_string(TaskKind task) {
  return task == TaskKind::confidence ? "confidence" : "two_attempt";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "confidence") return TaskKind::confidence;
  if (name == "two_attempt") return TaskKind::two_attempt;
  throw ConfigError("unknown task '" + name + "'");
}

int digit_base_for(int choices, int tokens) {
  if (choices < 1 || tokens < 1) throw ConfigError("digit_base_for: bad arguments");
  int base = 1;
  auto covers = [&](int b) {
    std::uint64_t v = 1;
    for (int t = 0; t < tokens; ++t) {
      v *= static_cast<std::uint64_t>(b);
      if (v >= static_cast<std::uint64_t>(choices)) return true;
    }
    return v >= static_cast<std::uint64_t>(choices);
  };
  while (!covers(base)) ++base;
  return base;
}

int decode_choice(std::span<const int> tokens, int base, int choices) {
  std::uint64_t value = 0;
  std::uint64_t weight = 1;
  const auto mod = static_cast<std::uint64_t>(choices);
  for (int tok : tokens) {
    value = (value + static_cast<std::uint64_t>(tok) % mod * weight) % mod;
    weight = (weight * static_cast<std::uint64_t>(base)) % mod;
  }
  return static_cast<int>(value);
}

int EnvSpec::first_digit_base() const { return digit_base_for(num_answers, tokens_per_block); }
int EnvSpec::second_digit_base() const {
  return digit_base_for(second_choice_count(), tokens_per_block);
}
int EnvSpec::vocab_size() const { return std::max(first_digit_base(), second_digit_base()); }

std::vector<std::string> EnvSpec::validate() const {
  std::vector<std::string> v;
  if (class_difficulty.empty()) v.push_back("at least one prompt class is required");
  for (double d : class_difficulty)
    if (!(d >= 0.0 && d <= 1.0)) v.push_back("class difficulty outside [0,1]");
  if (num_answers < 2) v.push_back("num_answers must be >= 2");
  if (abstain_answer < 0 || abstain_answer >= num_answers)
    v.push_back("abstain answer index outside [0, num_answers)");
  if (task == TaskKind::confidence && confidence_levels < 2)
    v.push_back("confidence_levels must be >= 2");
  if (tokens_per_block < 1) v.push_back("tokens_per_block must be >= 1");
  if (success_prob.size() != class_difficulty.size()) {
    v.push_back("success_prob must have one row per prompt class");
  } else {
    for (std::size_t c = 0; c < success_prob.size(); ++c) {
      if (static_cast<int>(success_prob[c].size()) != num_answers) {
        v.push_back("success_prob row " + std::to_string(c) + " must have num_answers entries");
        continue;
      }
      for (int a = 0; a < num_answers; ++a) {
        const double p = success_prob[c][static_cast<std::size_t>(a)];
        if (!(p >= 0.0 && p <= 1.0)) v.push_back("success probability outside [0,1]");
        if (a == abstain_answer && p != 0.0)
          v.push_back("abstain answer must have success probability 0");
      }
    }
  }
  return v;
}

void EnvSpec::check_valid() const {
  const auto v = validate();
  if (v.empty()) return;
  std::string msg = "invalid environment:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ConfigError(msg);
}

namespace {

std::vector<std::vector<double>> derived_success_table(const std::vector<double>& difficulties,
                                                       int num_answers, int abstain) {
  std::vector<std::vector<double>> table;
  table.reserve(difficulties.size());
  for (double d : difficulties) {
    std::vector<double> row(static_cast<std::size_t>(num_answers), d);
    row[static_cast<std::size_t>(abstain)] = 0.0;
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace

EnvSpec EnvSpec::confidence_task(std::vector<double> difficulties, int num_answers,
                                 int confidence_levels, int tokens_per_block) {
  EnvSpec env;
  env.task = TaskKind::confidence;
  env.class_difficulty = std::move(difficulties);
  env.num_answers = num_answers;
  env.abstain_answer = num_answers - 1;
  env.confidence_levels = confidence_levels;
  env.tokens_per_block = tokens_per_block;
  env.success_prob = derived_success_table(env.class_difficulty, num_answers, env.abstain_answer);
  env.check_valid();
  return env;
}

EnvSpec EnvSpec::two_attempt_task(std::vector<double> difficulties, int num_answers,
                                  int tokens_per_block) {
  EnvSpec env;
  env.task = TaskKind::two_attempt;
  env.class_difficulty = std::move(difficulties);
  env.num_answers = num_answers;
  env.abstain_answer = num_answers - 1;
  env.tokens_per_block = tokens_per_block;
  env.success_prob = derived_success_table(env.class_difficulty, num_answers, env.abstain_answer);
  env.check_valid();
  return env;
}

EnvSpec& EnvSpec::with_success_prob(std::vector<std::vector<double>> table) {
  success_prob = std::move(table);
  check_valid();
  return *this;
}

TabularPolicy::TabularPolicy(const EnvSpec& env)
    : num_classes_(env.num_classes()),
      tokens_per_block_(env.tokens_per_block),
      first_base_(env.first_digit_base()),
      second_base_(env.second_digit_base()),
      first_choices_(env.num_answers),
      second_choices_(env.second_choice_count()) {
  env.check_valid();
  const int first_params = num_classes_ * tokens_per_block_ * first_base_;
  const int second_params = num_classes_ * first_choices_ * tokens_per_block_ * second_base_;
  second_table_offset_ = first_params;
  params_.assign(static_cast<std::size_t>(first_params + second_params), 0.0);
  old_params_ = params_;
}

int TabularPolicy::first_block_offset(int cls, int pos) const {
  return (cls * tokens_per_block_ + pos) * first_base_;
}

int TabularPolicy::second_block_offset(int cls, int first_choice, int pos) const {
  return second_table_offset_ +
         ((cls * first_choices_ + first_choice) * tokens_per_block_ + pos) * second_base_;
}

std::vector<double> TabularPolicy::probs_at(int offset, int width, bool use_old) const {
  const auto p = raw(use_old);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < width; ++i)
    max_logit = std::max(max_logit, p[static_cast<std::size_t>(offset + i)]);
  std::vector<double> out(static_cast<std::size_t>(width));
  double total = 0.0;
  for (int i = 0; i < width; ++i) {
    out[static_cast<std::size_t>(i)] =
        std::exp(p[static_cast<std::size_t>(offset + i)] - max_logit);
    total += out[static_cast<std::size_t>(i)];
  }
  for (double& x : out) x /= total;
  return out;
}

double TabularPolicy::log_prob_at(int offset, int width, int symbol, bool use_old) const {
  const auto p = raw(use_old);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < width; ++i)
    max_logit = std::max(max_logit, p[static_cast<std::size_t>(offset + i)]);
  double total = 0.0;
  for (int i = 0; i < width; ++i)
    total += std::exp(p[static_cast<std::size_t>(offset + i)] - max_logit);
  return p[static_cast<std::size_t>(offset + symbol)] - max_logit - std::log(total);
}

bool TabularPolicy::shape_matches(const EnvSpec& env) const {
  return num_classes_ == env.num_classes() && tokens_per_block_ == env.tokens_per_block &&
         first_base_ == env.first_digit_base() && second_base_ == env.second_digit_base() &&
         first_choices_ == env.num_answers && second_choices_ == env.second_choice_count();
}

TabularPolicy TabularPolicy::calibrated(const EnvSpec& env, double sharpness) {
  if (env.task != TaskKind::confidence)
    throw ConfigError("calibrated policy is only defined for the confidence task");
  TabularPolicy policy(env);
  const int levels = env.confidence_levels;
  const int base = env.second_digit_base();
  auto params = policy.params();
  for (int cls = 0; cls < env.num_classes(); ++cls) {
    for (int a = 0; a < env.num_answers; ++a) {
      const double target = env.success_prob[static_cast<std::size_t>(cls)][static_cast<std::size_t>(a)];
      if (env.tokens_per_block == 1) {
        const int offset = policy.second_block_offset(cls, a, 0);
        for (int b = 0; b < levels; ++b) {
          const double q = env.confidence_value(b);
          params[static_cast<std::size_t>(offset + b)] = -sharpness * (q - target) * (q - target);
        }
      } else {
        // Multi-token blocks: peak each digit of the bin nearest the target.
        int bin = static_cast<int>(std::lround(target * (levels - 1)));
        for (int pos = 0; pos < env.tokens_per_block; ++pos) {
          const int digit = bin % base;
          bin /= base;
          const int offset = policy.second_block_offset(cls, a, pos);
          for (int d = 0; d < base; ++d)
            params[static_cast<std::size_t>(offset + d)] =
                -sharpness * (d - digit) * (d - digit) / static_cast<double>(base);
        }
      }
    }
  }
  policy.snapshot_old();
  return policy;
}

void for_each_token_slice(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                          const SegmentedRollout& rollout,
                          const std::function<void(const TokenSlice&)>& fn) {
  if (rollout.blocks.empty()) return;
  const Block& first = rollout.blocks.front();
  std::vector<int> first_tokens;
  first_tokens.reserve(first.tokens.size());
  for (const TokenRecord& t : first.tokens) first_tokens.push_back(t.token_id);
  const int first_choice =
      decode_choice(first_tokens, env.first_digit_base(), env.num_answers);

  for (const Block& block : rollout.blocks) {
    for (std::size_t pos = 0; pos < block.tokens.size(); ++pos) {
      TokenSlice slice;
      slice.block_k = block.index_k;
      slice.position = static_cast<int>(pos);
      if (block.index_k == 1) {
        slice.offset = policy.first_block_offset(prompt_class, slice.position);
        slice.width = policy.first_digit_base();
      } else {
        slice.offset = policy.second_block_offset(prompt_class, first_choice, slice.position);
        slice.width = policy.second_digit_base();
      }
      slice.symbol = block.tokens[pos].token_id;
      fn(slice);
    }
  }
}

namespace {

struct SampledBlock {
  std::vector<int> tokens;
  std::vector<double> logprobs;
  int choice = 0;
};

SampledBlock sample_block(const TabularPolicy& policy, int base, int choices,
                          const std::function<int(int)>& offset_for_pos, RngStream& rng) {
  SampledBlock out;
  const int length = policy.tokens_per_block();
  out.tokens.resize(static_cast<std::size_t>(length));
  out.logprobs.resize(static_cast<std::size_t>(length));
  for (int pos = 0; pos < length; ++pos) {
    const int offset = offset_for_pos(pos);
    const std::vector<double> probs = policy.probs_at(offset, base, /*use_old=*/false);
    const int symbol = rng.next_categorical(probs);
    out.tokens[static_cast<std::size_t>(pos)] = symbol;
    out.logprobs[static_cast<std::size_t>(pos)] =
        policy.log_prob_at(offset, base, symbol, /*use_old=*/false);
  }
  out.choice = decode_choice(out.tokens, base, choices);
  return out;
}

Block build_block(int k, const SampledBlock& sampled, double reward, BlockPayload payload) {
  Block b;
  b.index_k = k;
  for (std::size_t i = 0; i < sampled.tokens.size(); ++i)
    b.tokens.push_back({sampled.tokens[i], sampled.logprobs[i], sampled.logprobs[i]});
  b.reward = reward;
  b.payload = std::move(payload);
  return b;
}

}  // namespace

RolloutGroup sample_group(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                          int group_size, const std::string& prompt_id, RewardKind reward,
                          RngStream rng) {
  env.check_valid();
  if (!policy.shape_matches(env)) throw ContractError("policy shape does not match environment");
  if (prompt_class < 0 || prompt_class >= env.num_classes())
    throw ConfigError("prompt class out of range");
  if (group_size < 1) throw ConfigError("group size must be >= 1");
  const bool two_attempt = env.task == TaskKind::two_attempt;
  if (two_attempt != (reward == RewardKind::two_attempt))
    throw ConfigError("reward kind '" + to_string(reward) + "' does not match task '" +
                      to_string(env.task) + "'");

  RolloutGroup group;
  group.prompt_id = prompt_id;
  group.outcome_labels = {outcome::kCorrect, outcome::kIncorrect};
  group.vocab_size = env.vocab_size();
  group.rollouts.reserve(static_cast<std::size_t>(group_size));

  for (int i = 0; i < group_size; ++i) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(i));

    const SampledBlock sol = sample_block(
        policy, env.first_digit_base(), env.num_answers,
        [&](int pos) { return policy.first_block_offset(prompt_class, pos); }, sub);
    const double p_success =
        env.success_prob[static_cast<std::size_t>(prompt_class)][static_cast<std::size_t>(sol.choice)];
    const int c1 = sub.next_bernoulli(p_success) ? 1 : 0;

    const SampledBlock second = sample_block(
        policy, env.second_digit_base(), env.second_choice_count(),
        [&](int pos) { return policy.second_block_offset(prompt_class, sol.choice, pos); }, sub);

    double r1 = 0.0, r2 = 0.0;
    BlockPayload second_payload;
    if (two_attempt) {
      const double p2 =
          env.success_prob[static_cast<std::size_t>(prompt_class)][static_cast<std::size_t>(second.choice)];
      const int c2 = sub.next_bernoulli(p2) ? 1 : 0;
      std::tie(r1, r2) = two_attempt_rewards(c1, c2, sol.choice, second.choice);
      second_payload = AnswerPayload{second.choice};
    } else {
      const double q = env.confidence_value(second.choice);
      r1 = correctness_reward(c1);
      switch (reward) {
        case RewardKind::rlvr: r2 = 0.0; break;
        case RewardKind::brier: r2 = brier_reward(q, c1); break;
        case RewardKind::bce: r2 = bce_reward(q, c1); break;
        // The scalar R_RLCR is the sum of the two block rewards.
        case RewardKind::rlcr: r2 = brier_reward(q, c1); break;
        case RewardKind::two_attempt: break;  // unreachable
      }
      second_payload = ConfidencePayload{q};
    }

    SegmentedRollout rollout;
    rollout.prompt_id = prompt_id;
    rollout.blocks.push_back(build_block(1, sol, r1, AnswerPayload{sol.choice}));
    rollout.blocks.push_back(build_block(2, second, r2, std::move(second_payload)));
    rollout.outcomes[2] = OutcomeLabel{c1 == 1 ? outcome::kCorrect : outcome::kIncorrect};
    group.rollouts.push_back(std::move(rollout));
  }
  return group;
}

int sample_second_choice(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                         int first_choice, RngStream& rng) {
  const SampledBlock second = sample_block(
      policy, env.second_digit_base(), env.second_choice_count(),
      [&](int pos) { return policy.second_block_offset(prompt_class, first_choice, pos); }, rng);
  return second.choice;
}

namespace {

// Distribution over decoded base-`base` values modulo `choices`, given the
// per-position digit distributions.
std::vector<double> decoded_pmf(const EnvSpec& env, const TabularPolicy& policy, int base,
                                int choices, const std::function<int(int)>& offset_for_pos,
                                bool use_old) {
  std::vector<double> dist(static_cast<std::size_t>(choices), 0.0);
  dist[0] = 1.0;
  std::uint64_t weight = 1;
  const auto mod = static_cast<std::uint64_t>(choices);
  for (int pos = 0; pos < env.tokens_per_block; ++pos) {
    const std::vector<double> digit_probs =
        policy.probs_at(offset_for_pos(pos), base, use_old);
    std::vector<double> next(static_cast<std::size_t>(choices), 0.0);
    for (int r = 0; r < choices; ++r) {
      if (dist[static_cast<std::size_t>(r)] == 0.0) continue;
      for (int d = 0; d < base; ++d) {
        const int nr = static_cast<int>(
            (static_cast<std::uint64_t>(r) + static_cast<std::uint64_t>(d) % mod * weight) % mod);
        next[static_cast<std::size_t>(nr)] +=
            dist[static_cast<std::size_t>(r)] * digit_probs[static_cast<std::size_t>(d)];
      }
    }
    dist.swap(next);
    weight = (weight * static_cast<std::uint64_t>(base)) % mod;
  }
  return dist;
}

}  // namespace

std::vector<double> first_choice_pmf(const EnvSpec& env, const TabularPolicy& policy,
                                     int prompt_class, bool use_old) {
  return decoded_pmf(env, policy, env.first_digit_base(), env.num_answers,
                     [&](int pos) { return policy.first_block_offset(prompt_class, pos); },
                     use_old);
}

std::vector<double> second_choice_pmf(const EnvSpec& env, const TabularPolicy& policy,
                                      int prompt_class, int first_choice, bool use_old) {
  return decoded_pmf(
      env, policy, env.second_digit_base(), env.second_choice_count(),
      [&](int pos) { return policy.second_block_offset(prompt_class, first_choice, pos); },
      use_old);
}

double true_conditional_value(const EnvSpec& env, const TabularPolicy& policy, int prompt_class,
                              int answer, int c, RewardKind reward) {
  if (env.task != TaskKind::confidence)
    throw ConfigError("true_conditional_value requires the confidence task");
  if (reward != RewardKind::brier && reward != RewardKind::bce)
    throw ConfigError("true_conditional_value requires a brier or bce reward");
  const std::vector<double> pmf = second_choice_pmf(env, policy, prompt_class, answer);
  double value = 0.0;
  for (int bin = 0; bin < env.confidence_levels; ++bin) {
    const double q = env.confidence_value(bin);
    const double r = reward == RewardKind::brier ? brier_reward(q, c) : bce_reward(q, c);
    value += pmf[static_cast<std::size_t>(bin)] * r;
  }
  return value;
}

RolloutGroup refresh_new_logprobs(const EnvSpec& env, const TabularPolicy& policy,
                                  int prompt_class, const RolloutGroup& group) {
  RolloutGroup out = group;
  for (SegmentedRollout& rollout : out.rollouts) {
    std::vector<double> fresh;
    fresh.reserve(static_cast<std::size_t>(rollout.total_tokens()));
    for_each_token_slice(env, policy, prompt_class, rollout, [&](const TokenSlice& s) {
      fresh.push_back(policy.log_prob_at(s.offset, s.width, s.symbol, /*use_old=*/false));
    });
    std::size_t idx = 0;
    for (Block& b : rollout.blocks)
      for (TokenRecord& t : b.tokens) t.logprob_new = fresh[idx++];
  }
  return out;
}

double exact_first_attempt_accuracy(const EnvSpec& env, const TabularPolicy& policy) {
  double acc = 0.0;
  for (int cls = 0; cls < env.num_classes(); ++cls) {
    const std::vector<double> pmf = first_choice_pmf(env, policy, cls);
    for (int a = 0; a < env.num_answers; ++a)
      acc += pmf[static_cast<std::size_t>(a)] *
             env.success_prob[static_cast<std::size_t>(cls)][static_cast<std::size_t>(a)];
  }
  return acc / env.num_classes();
}

double exact_second_attempt_accuracy(const EnvSpec& env, const TabularPolicy& policy) {
  if (env.task != TaskKind::two_attempt)
    throw ConfigError("second-attempt accuracy requires the two_attempt task");
  double acc = 0.0;
  for (int cls = 0; cls < env.num_classes(); ++cls) {
    const std::vector<double> first = first_choice_pmf(env, policy, cls);
    for (int a1 = 0; a1 < env.num_answers; ++a1) {
      if (first[static_cast<std::size_t>(a1)] == 0.0) continue;
      const std::vector<double> second = second_choice_pmf(env, policy, cls, a1);
      double value = 0.0;
      for (int a2 = 0; a2 < env.num_answers; ++a2)
        value += second[static_cast<std::size_t>(a2)] *
                 env.success_prob[static_cast<std::size_t>(cls)][static_cast<std::size_t>(a2)];
      acc += first[static_cast<std::size_t>(a1)] * value;
    }
  }
  return acc / env.num_classes();
}

nlohmann::json env_to_json(const EnvSpec& env) {
  return nlohmann::json{{"task", to_string(env.task)},
                        {"class_difficulty", env.class_difficulty},
                        {"num_answers", env.num_answers},
                        {"abstain_answer", env.abstain_answer},
                        {"success_prob", env.success_prob},
                        {"confidence_levels", env.confidence_levels},
                        {"tokens_per_block", env.tokens_per_block}};
}

EnvSpec env_from_json(const nlohmann::json& j) {
  EnvSpec env;
  env.task = task_kind_from_string(j.at("task").get<std::string>());
  env.class_difficulty = j.at("class_difficulty").get<std::vector<double>>();
  env.num_answers = j.at("num_answers").get<int>();
  env.abstain_answer = j.at("abstain_answer").get<int>();
  env.success_prob = j.at("success_prob").get<std::vector<std::vector<double>>>();
  env.confidence_levels = j.at("confidence_levels").get<int>();
  env.tokens_per_block = j.at("tokens_per_block").get<int>();
  env.check_valid();
  return env;
}

nlohmann::json policy_to_json(const EnvSpec& env, const TabularPolicy& policy) {
  const auto p = policy.params();
  return nlohmann::json{{"env", env_to_json(env)},
                        {"params", std::vector<double>(p.begin(), p.end())}};
}

std::pair<EnvSpec, TabularPolicy> policy_from_json(const nlohmann::json& j) {
  EnvSpec env = env_from_json(j.at("env"));
  TabularPolicy policy(env);
  const auto values = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != policy.param_count())
    throw ConfigError("policy snapshot has " + std::to_string(values.size()) +
                      " parameters, expected " + std::to_string(policy.param_count()));
  std::copy(values.begin(), values.end(), policy.params().begin());
  policy.snapshot_old();
  return {std::move(env), std::move(policy)};
}

}  // namespace bae
