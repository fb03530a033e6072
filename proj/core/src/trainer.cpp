#include "bae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bae/common.hpp"
#include "bae/evalkit.hpp"
#include "bae/parallel.hpp"

namespace bae {

namespace {
// Substream labels under the run's root stream.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kProbeStream = 2;
}  // namespace

std::string to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::bae ? "bae" : "grpo";
}

ObjectiveKind objective_kind_from_string(const std::string& name) {
  if (name == "bae") return ObjectiveKind::bae;
  if (name == "grpo") return ObjectiveKind::grpo;
  throw ConfigError("unknown objective '" + name + "'");
}

EntropyRule entropy_rule_from_string(const std::string& name) {
  if (name == "proportional") return EntropyRule::proportional;
  if (name == "off") return EntropyRule::off;
  throw ConfigError("unknown entropy rule '" + name + "'");
}

void TrainerConfig::check_valid(const EnvSpec& env) const {
  env.check_valid();
  std::vector<std::string> v;
  if (group_size < 2) v.push_back("group_size must be >= 2");
  if (batch_prompts < 1) v.push_back("batch_prompts must be >= 1");
  if (!(learning_rate > 0.0)) v.push_back("learning_rate must be > 0");
  if (steps < 0) v.push_back("steps must be >= 0");
  if (!(eps_clip > 0.0 && eps_clip < 1.0)) v.push_back("eps_clip must lie in (0,1)");
  if (beta_kl < 0.0) v.push_back("beta_kl must be >= 0");
  if (entropy_step < 0.0) v.push_back("entropy_step must be >= 0");
  if (entropy_coeff_min > entropy_coeff_max)
    v.push_back("entropy coefficient bounds are inverted");
  if (probe_size < 0) v.push_back("probe_size must be >= 0");
  if (baseline.shrinkage < 0.0 || baseline.shrinkage > 1.0)
    v.push_back("ocb shrinkage must lie in [0,1]");
  const bool two_attempt = env.task == TaskKind::two_attempt;
  if (two_attempt != (reward == RewardKind::two_attempt))
    v.push_back("reward kind '" + to_string(reward) + "' does not match task '" +
                to_string(env.task) + "'");
  if (!v.empty()) {
    std::string msg = "invalid trainer config:";
    for (const auto& s : v) msg += "\n  - " + s;
    throw ConfigError(msg);
  }
}

double entropy_coefficient_update(double coeff, double measured_entropy, double target,
                                  double step, double coeff_min, double coeff_max) {
  return std::clamp(coeff + step * (target - measured_entropy), coeff_min, coeff_max);
}

Trainer::Trainer(EnvSpec env, TrainerConfig config, std::uint64_t seed, int threads)
    : env_(std::move(env)),
      config_(std::move(config)),
      threads_(std::max(1, threads)),
      root_(seed),
      policy_(env_),
      entropy_coeff_(config_.entropy_coeff_init) {
  config_.check_valid(env_);
  policy_.snapshot_old();
  if (config_.beta_kl > 0.0) reference_ = std::make_unique<TabularPolicy>(policy_);
}

namespace {

struct GroupWork {
  RolloutGroup group;
  int prompt_class = 0;
  double loss = 0.0;
  std::vector<double> grad;
  double entropy_sum = 0.0;
  std::vector<double> entropy_grad;
  long token_count = 0;
};

// Entropy of the softmax at each sampled token's slice, plus its gradient:
// dH/dz_u = -p_u (ln p_u + H).
void accumulate_entropy(const EnvSpec& env, const TabularPolicy& policy, GroupWork& work) {
  work.entropy_grad.assign(static_cast<std::size_t>(policy.param_count()), 0.0);
  for (const SegmentedRollout& rollout : work.group.rollouts) {
    for_each_token_slice(env, policy, work.prompt_class, rollout, [&](const TokenSlice& s) {
      const std::vector<double> probs = policy.probs_at(s.offset, s.width, /*use_old=*/false);
      double h = 0.0;
      for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
      work.entropy_sum += h;
      ++work.token_count;
      for (int u = 0; u < s.width; ++u) {
        const double p = probs[static_cast<std::size_t>(u)];
        if (p > 0.0)
          work.entropy_grad[static_cast<std::size_t>(s.offset + u)] -=
              p * (std::log(p) + h);
      }
    });
  }
}

}  // namespace

StepReport Trainer::step() {
  const int step_index = steps_done_;
  const int batch = config_.batch_prompts;
  const int num_classes = env_.num_classes();
  const int k_blocks = 2;
  RngStream step_stream = root_.derive(kTrainStream).derive(static_cast<std::uint64_t>(step_index));

  std::vector<GroupWork> work(static_cast<std::size_t>(batch));

  // Sample the whole batch first; the batch-mean baseline needs it, and the
  // per-prompt substreams keep any parallel schedule deterministic.
  parallel_for(0, batch, threads_, [&](int j) {
    GroupWork& w = work[static_cast<std::size_t>(j)];
    w.prompt_class = j % num_classes;
    const std::string prompt_id =
        "s" + std::to_string(step_index) + ".g" + std::to_string(j);
    w.group = sample_group(env_, policy_, w.prompt_class, config_.group_size, prompt_id,
                           config_.reward, step_stream.derive(static_cast<std::uint64_t>(j)));
  });

  std::vector<double> batch_means;
  if (config_.objective == ObjectiveKind::bae &&
      config_.baseline.variant == BaselineVariant::batch_mean) {
    std::vector<RolloutGroup> groups;
    groups.reserve(work.size());
    for (const GroupWork& w : work) groups.push_back(w.group);
    batch_means = batch_block_means(groups);
  }

  ClipConfig clip;
  clip.eps_clip = config_.eps_clip;
  clip.beta_kl = config_.beta_kl;

  const int stat_blocks = config_.objective == ObjectiveKind::bae ? k_blocks : 1;
  std::vector<std::vector<double>> all_advantages(static_cast<std::size_t>(stat_blocks));

  std::vector<AdvantageTable> tables(static_cast<std::size_t>(batch));
  std::vector<std::vector<double>> scalars(static_cast<std::size_t>(batch));

  parallel_for(0, batch, threads_, [&](int j) {
    GroupWork& w = work[static_cast<std::size_t>(j)];
    if (config_.objective == ObjectiveKind::bae) {
      tables[static_cast<std::size_t>(j)] = compute_blockwise_advantages(
          w.group, config_.baseline, config_.normalization, batch_means);
      w.loss = bae_loss(w.group, tables[static_cast<std::size_t>(j)], clip);
      w.grad = bae_policy_gradient(w.group, w.prompt_class, env_,
                                   tables[static_cast<std::size_t>(j)], clip, policy_);
    } else {
      std::vector<double> totals(static_cast<std::size_t>(w.group.size()), 0.0);
      for (int i = 0; i < w.group.size(); ++i)
        for (const Block& b : w.group.rollouts[static_cast<std::size_t>(i)].blocks)
          totals[static_cast<std::size_t>(i)] += b.reward;
      scalars[static_cast<std::size_t>(j)] =
          grpo_scalar_advantages(totals, config_.normalization);
      RefLogprobs ref;
      const RefLogprobs* ref_ptr = nullptr;
      if (config_.beta_kl > 0.0) {
        ref.resize(static_cast<std::size_t>(w.group.size()));
        for (int i = 0; i < w.group.size(); ++i) {
          const SegmentedRollout& rollout = w.group.rollouts[static_cast<std::size_t>(i)];
          for_each_token_slice(env_, *reference_, w.prompt_class, rollout,
                               [&](const TokenSlice& s) {
                                 ref[static_cast<std::size_t>(i)].push_back(
                                     reference_->log_prob_at(s.offset, s.width, s.symbol,
                                                             /*use_old=*/false));
                               });
        }
        ref_ptr = &ref;
      }
      w.loss = grpo_loss(w.group, scalars[static_cast<std::size_t>(j)], clip, ref_ptr);
      w.grad = grpo_policy_gradient(w.group, w.prompt_class, env_,
                                    scalars[static_cast<std::size_t>(j)], clip, policy_,
                                    ref_ptr);
    }
    accumulate_entropy(env_, policy_, w);
  });

  // Fixed-order reduction keeps results identical across thread counts.
  double loss = 0.0;
  double entropy_sum = 0.0;
  long token_count = 0;
  std::vector<double> grad(static_cast<std::size_t>(policy_.param_count()), 0.0);
  std::vector<double> entropy_grad(static_cast<std::size_t>(policy_.param_count()), 0.0);
  std::vector<double> reward_sums(static_cast<std::size_t>(k_blocks), 0.0);
  long reward_count = 0;

  for (const GroupWork& w : work) {
    loss += w.loss;
    entropy_sum += w.entropy_sum;
    token_count += w.token_count;
    for (std::size_t p = 0; p < grad.size(); ++p) {
      grad[p] += w.grad[p];
      entropy_grad[p] += w.entropy_grad[p];
    }
    for (const SegmentedRollout& rollout : w.group.rollouts)
      for (const Block& b : rollout.blocks)
        reward_sums[static_cast<std::size_t>(b.index_k - 1)] += b.reward;
    reward_count += w.group.size();
  }
  loss /= static_cast<double>(batch);
  const double mean_entropy = entropy_sum / static_cast<double>(token_count);

  for (int j = 0; j < batch; ++j) {
    if (config_.objective == ObjectiveKind::bae) {
      for (int k = 1; k <= k_blocks; ++k)
        for (int i = 0; i < work[static_cast<std::size_t>(j)].group.size(); ++i)
          all_advantages[static_cast<std::size_t>(k - 1)].push_back(
              tables[static_cast<std::size_t>(j)].at(i, k));
    } else {
      for (double a : scalars[static_cast<std::size_t>(j)])
        all_advantages[0].push_back(a);
    }
  }

  if (!std::isfinite(loss) || !std::isfinite(mean_entropy))
    throw NumericError("non-finite loss", step_index);

  const double coeff = entropy_coeff_;
  auto params = policy_.params();
  for (std::size_t p = 0; p < grad.size(); ++p) {
    const double ascent = -grad[p] / static_cast<double>(batch) +
                          coeff * entropy_grad[p] / static_cast<double>(token_count);
    params[p] += config_.learning_rate * ascent;
    if (!std::isfinite(params[p])) throw NumericError("non-finite parameter", step_index);
  }
  policy_.snapshot_old();

  if (config_.entropy_rule == EntropyRule::proportional)
    entropy_coeff_ = entropy_coefficient_update(entropy_coeff_, mean_entropy,
                                                config_.entropy_target, config_.entropy_step,
                                                config_.entropy_coeff_min,
                                                config_.entropy_coeff_max);

  StepReport report;
  report.step = step_index;
  report.loss = loss;
  report.mean_entropy = mean_entropy;
  report.entropy_coeff = coeff;
  for (double sum : reward_sums)
    report.mean_block_reward.push_back(sum / static_cast<double>(reward_count));
  for (const std::vector<double>& values : all_advantages) {
    AdvantageStats stats;
    stats.min = std::numeric_limits<double>::infinity();
    stats.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double v : values) {
      sum += v;
      stats.min = std::min(stats.min, v);
      stats.max = std::max(stats.max, v);
    }
    stats.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(values.size()));
    report.advantage_stats.push_back(stats);
  }
  report.probe_ece = probe_ece(step_index);

  ++steps_done_;
  return report;
}

std::optional<double> Trainer::probe_ece(int step_index) {
  if (env_.task != TaskKind::confidence || config_.probe_size <= 0) return std::nullopt;
  RngStream probe_stream =
      root_.derive(kProbeStream).derive(static_cast<std::uint64_t>(step_index));
  std::vector<CalibrationRecord> records(static_cast<std::size_t>(config_.probe_size));
  parallel_for(0, config_.probe_size, threads_, [&](int m) {
    const int cls = m % env_.num_classes();
    const RolloutGroup group =
        sample_group(env_, policy_, cls, 1, "probe", config_.reward,
                     probe_stream.derive(static_cast<std::uint64_t>(m)));
    const SegmentedRollout& rollout = group.rollouts.front();
    const auto& payload = std::get<ConfidencePayload>(rollout.blocks[1].payload);
    const int c = rollout.outcomes.at(2).value == outcome::kCorrect ? 1 : 0;
    records[static_cast<std::size_t>(m)] = CalibrationRecord{payload.q, c};
  });
  return ece(records);
}

std::vector<StepReport> Trainer::run() {
  std::vector<StepReport> reports;
  reports.reserve(static_cast<std::size_t>(config_.steps));
  for (int s = 0; s < config_.steps; ++s) reports.push_back(step());
  return reports;
}

}  // namespace bae
