#include "bae/advantage.hpp"

#include <cmath>
#include <map>

#include "bae/common.hpp"

namespace bae {

std::string to_string(BaselineVariant v) {
  switch (v) {
    case BaselineVariant::none: return "none";
    case BaselineVariant::batch_mean: return "batch_mean";
    case BaselineVariant::group_mean: return "group_mean";
    case BaselineVariant::outcome_conditioned: return "ocb";
  }
  return "?";
}

BaselineVariant baseline_variant_from_string(const std::string& name) {
  if (name == "none") return BaselineVariant::none;
  if (name == "batch_mean") return BaselineVariant::batch_mean;
  if (name == "group_mean") return BaselineVariant::group_mean;
  if (name == "ocb" || name == "outcome_conditioned") return BaselineVariant::outcome_conditioned;
  throw ConfigError("unknown baseline '" + name + "'");
}

std::size_t AdvantageTable::index(int i, int k) const {
  if (i < 0 || i >= num_rollouts_ || k < 1 || k > num_blocks_)
    throw ContractError("advantage entry (" + std::to_string(i) + ", " + std::to_string(k) +
                        ") outside table " + std::to_string(num_rollouts_) + "x" +
                        std::to_string(num_blocks_));
  return static_cast<std::size_t>(i) * num_blocks_ + (k - 1);
}

namespace {

double mean_of(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Population standard deviation, the divide-by-G convention.
double population_stddev(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

std::vector<double> grpo_scalar_advantages(std::span<const double> rewards,
                                           NormalizationMode mode) {
  if (rewards.empty()) throw ContractError("grpo_scalar_advantages: empty group");
  const double mu = mean_of(rewards);
  std::vector<double> adv(rewards.size());
  if (mode.variant == NormalizationMode::Variant::center_only) {
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - mu;
  } else {
    if (rewards.size() < 2)
      throw ContractError("grpo_scalar_advantages: center_and_scale needs G >= 2");
    const double sigma = population_stddev(rewards, mu);
    for (std::size_t i = 0; i < rewards.size(); ++i)
      adv[i] = (rewards[i] - mu) / (sigma + mode.eps_num);
  }
  return adv;
}

std::vector<double> block_baselines(std::span<const double> rewards,
                                    std::span<const OutcomeLabel> outcomes, BaselineKind kind,
                                    std::optional<double> batch_mean_value) {
  const std::size_t g = rewards.size();
  std::vector<double> base(g, 0.0);
  switch (kind.variant) {
    case BaselineVariant::none:
      break;
    case BaselineVariant::batch_mean: {
      if (!batch_mean_value)
        throw ConfigError("batch_mean baseline requested without a batch mean value");
      for (std::size_t i = 0; i < g; ++i) base[i] = *batch_mean_value;
      break;
    }
    case BaselineVariant::group_mean: {
      const double mu = mean_of(rewards);
      for (std::size_t i = 0; i < g; ++i) base[i] = mu;
      break;
    }
    case BaselineVariant::outcome_conditioned: {
      if (outcomes.size() != g)
        throw ConfigError("outcome_conditioned baseline requires one outcome per rollout");
      if (kind.shrinkage < 0.0 || kind.shrinkage > 1.0)
        throw ConfigError("OCB shrinkage must lie in [0,1]");
      std::map<std::string, std::pair<double, int>> strata;  // label -> (sum, count)
      for (std::size_t i = 0; i < g; ++i) {
        auto& [sum, count] = strata[outcomes[i].value];
        sum += rewards[i];
        ++count;
      }
      const double group_mu = mean_of(rewards);
      for (std::size_t i = 0; i < g; ++i) {
        const auto& [sum, count] = strata[outcomes[i].value];
        const double stratum_mu = sum / count;
        base[i] = (1.0 - kind.shrinkage) * stratum_mu + kind.shrinkage * group_mu;
      }
      break;
    }
  }
  return base;
}

std::vector<double> batch_block_means(std::span<const RolloutGroup> groups) {
  int k_blocks = 0;
  for (const RolloutGroup& g : groups) k_blocks = std::max(k_blocks, g.num_blocks());
  std::vector<double> sums(static_cast<std::size_t>(k_blocks), 0.0);
  std::vector<long> counts(static_cast<std::size_t>(k_blocks), 0);
  for (const RolloutGroup& g : groups)
    for (const SegmentedRollout& r : g.rollouts)
      for (const Block& b : r.blocks) {
        sums[static_cast<std::size_t>(b.index_k - 1)] += b.reward;
        counts[static_cast<std::size_t>(b.index_k - 1)] += 1;
      }
  for (std::size_t k = 0; k < sums.size(); ++k)
    if (counts[k] > 0) sums[k] /= static_cast<double>(counts[k]);
  return sums;
}

AdvantageTable compute_blockwise_advantages(const RolloutGroup& group, BaselineKind kind,
                                            NormalizationMode mode,
                                            std::span<const double> batch_means,
                                            AdvantageTable* baselines_out) {
  const int g = group.size();
  const int k_blocks = group.num_blocks();
  if (g == 0 || k_blocks == 0) throw ContractError("compute_blockwise_advantages: empty group");

  AdvantageTable table(g, k_blocks);
  if (baselines_out) *baselines_out = AdvantageTable(g, k_blocks);

  std::vector<double> rewards(static_cast<std::size_t>(g));
  std::vector<OutcomeLabel> outcomes(static_cast<std::size_t>(g));
  std::vector<double> centered(static_cast<std::size_t>(g));

  for (int k = 1; k <= k_blocks; ++k) {
    for (int i = 0; i < g; ++i) {
      const SegmentedRollout& r = group.rollouts[static_cast<std::size_t>(i)];
      rewards[static_cast<std::size_t>(i)] = r.blocks[static_cast<std::size_t>(k - 1)].reward;
      if (k > 1) {
        auto it = r.outcomes.find(k);
        if (it == r.outcomes.end())
          throw ContractError("rollout " + std::to_string(i + 1) + " lacks outcome for k=" +
                              std::to_string(k));
        outcomes[static_cast<std::size_t>(i)] = it->second;
      }
    }

    std::optional<double> batch_mean;
    if (k > 1 && kind.variant == BaselineVariant::batch_mean) {
      if (static_cast<int>(batch_means.size()) < k)
        throw ConfigError("batch_mean baseline requires per-block batch means");
      batch_mean = batch_means[static_cast<std::size_t>(k - 1)];
    }

    // Block 1 shares the prompt as its starting state, so the plain group
    // mean is its baseline regardless of the configured kind.
    const std::vector<double> base =
        (k == 1) ? block_baselines(rewards, {}, BaselineKind::group_mean())
                 : block_baselines(rewards, outcomes, kind, batch_mean);

    for (int i = 0; i < g; ++i)
      centered[static_cast<std::size_t>(i)] =
          rewards[static_cast<std::size_t>(i)] - base[static_cast<std::size_t>(i)];

    if (mode.variant == NormalizationMode::Variant::center_and_scale) {
      const double mu = mean_of(centered);
      const double sigma = population_stddev(centered, mu);
      for (int i = 0; i < g; ++i)
        centered[static_cast<std::size_t>(i)] /= (sigma + mode.eps_num);
    }

    for (int i = 0; i < g; ++i) {
      table.set(i, k, centered[static_cast<std::size_t>(i)]);
      if (baselines_out) baselines_out->set(i, k, base[static_cast<std::size_t>(i)]);
    }
  }
  return table;
}

}  // namespace bae
