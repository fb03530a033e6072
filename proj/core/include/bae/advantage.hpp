#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bae/rollout.hpp"

namespace bae {

enum class BaselineVariant { none, batch_mean, group_mean, outcome_conditioned };

std::string to_string(BaselineVariant v);
BaselineVariant baseline_variant_from_string(const std::string& name);

// Which conditional-baseline estimator to subtract from later-block rewards.
// `shrinkage` blends the outcome-conditioned stratum mean toward the plain
// group mean (0 = pure stratum mean, 1 = group mean); it is only meaningful
// for the outcome_conditioned variant.
struct BaselineKind {
  BaselineVariant variant = BaselineVariant::group_mean;
  double shrinkage = 0.0;

  static BaselineKind none() { return {BaselineVariant::none, 0.0}; }
  static BaselineKind batch_mean() { return {BaselineVariant::batch_mean, 0.0}; }
  static BaselineKind group_mean() { return {BaselineVariant::group_mean, 0.0}; }
  static BaselineKind outcome_conditioned(double shrinkage = 0.0) {
    return {BaselineVariant::outcome_conditioned, shrinkage};
  }
};

// center_only subtracts the baseline and stops; center_and_scale also
// divides by the per-block population standard deviation plus eps_num.
struct NormalizationMode {
  enum class Variant { center_only, center_and_scale } variant = Variant::center_only;
  double eps_num = 1e-6;

  static NormalizationMode center_only() { return {Variant::center_only, 0.0}; }
  static NormalizationMode center_and_scale(double eps_num = 1e-6) {
    return {Variant::center_and_scale, eps_num};
  }
};

// Per-(rollout, block) scalar advantages for one group; exactly one entry
// per (i, k) of the source group.
class AdvantageTable {
 public:
  AdvantageTable() = default;
  AdvantageTable(int num_rollouts, int num_blocks)
      : num_rollouts_(num_rollouts),
        num_blocks_(num_blocks),
        values_(static_cast<std::size_t>(num_rollouts) * num_blocks, 0.0) {}

  int num_rollouts() const { return num_rollouts_; }
  int num_blocks() const { return num_blocks_; }

  // i is 0-based, k is 1-based to match block indices.
  double at(int i, int k) const { return values_[index(i, k)]; }
  void set(int i, int k, double value) { values_[index(i, k)] = value; }

 private:
  std::size_t index(int i, int k) const;

  int num_rollouts_ = 0;
  int num_blocks_ = 0;
  std::vector<double> values_;
};

// Vanilla GRPO scalar advantages over one group's rewards.
std::vector<double> grpo_scalar_advantages(std::span<const double> rewards,
                                           NormalizationMode mode);

// Baseline values b for one block of one group. `outcomes` is required for
// the outcome_conditioned variant (and must match rewards in length);
// `batch_mean_value` is required for batch_mean.
std::vector<double> block_baselines(std::span<const double> rewards,
                                    std::span<const OutcomeLabel> outcomes, BaselineKind kind,
                                    std::optional<double> batch_mean_value = std::nullopt);

// Per-block means over all groups of a batch, for the batch_mean baseline.
// Index 0 holds the mean for block 1.
std::vector<double> batch_block_means(std::span<const RolloutGroup> groups);

// Assembles blockwise advantages for a validated group: block 1 always uses
// the group-mean baseline; blocks k > 1 use `kind`; the result is normalized
// per `mode` (per-block scaling for center_and_scale). When `baselines_out`
// is non-null it receives the subtracted baseline values.
AdvantageTable compute_blockwise_advantages(const RolloutGroup& group, BaselineKind kind,
                                            NormalizationMode mode,
                                            std::span<const double> batch_means = {},
                                            AdvantageTable* baselines_out = nullptr);

}  // namespace bae
