#pragma once

#include <span>
#include <vector>

#include "bae/advantage.hpp"
#include "bae/env.hpp"
#include "bae/rollout.hpp"

namespace bae {

// Clipping and regularization knobs for the surrogate objectives.
// `block_weights` holds w_k for k = 1..K; empty means all 1.
struct ClipConfig {
  double eps_clip = 0.2;  // in (0, 1)
  double beta_kl = 0.0;
  std::vector<double> block_weights;

  double weight(int k) const {
    return block_weights.empty() ? 1.0 : block_weights.at(static_cast<std::size_t>(k - 1));
  }
  void check_valid() const;
};

// Per-token likelihood ratio between the current and behavior policies.
double token_ratio(const TokenRecord& rec);

// Reference-policy logprobs for the KL term, [rollout][token in block-major
// order]; only needed when beta_kl > 0.
using RefLogprobs = std::vector<std::vector<double>>;

// Blockwise clipped surrogate: every block contributes its own advantage,
// averaged over the block's tokens and weighted by w_k.
double bae_loss(const RolloutGroup& group, const AdvantageTable& adv, const ClipConfig& cfg);

// Vanilla clipped surrogate: one scalar advantage per rollout applied to all
// of its tokens, summed without per-length averaging. With beta_kl > 0 a
// per-token (logprob_new - logprob_ref) penalty is added outside the min.
double grpo_loss(const RolloutGroup& group, std::span<const double> scalar_advantages,
                 const ClipConfig& cfg, const RefLogprobs* ref_logprobs = nullptr);

// Exact d(loss)/d(theta) for the tabular softmax policy, treating advantages
// as constants. Tokens on the clipped branch contribute zero gradient.
// Token logprobs under the live parameters are recomputed internally, so the
// result matches finite differences of the loss through
// refresh_new_logprobs.
std::vector<double> bae_policy_gradient(const RolloutGroup& group, int prompt_class,
                                        const EnvSpec& env, const AdvantageTable& adv,
                                        const ClipConfig& cfg, const TabularPolicy& policy);
std::vector<double> grpo_policy_gradient(const RolloutGroup& group, int prompt_class,
                                         const EnvSpec& env,
                                         std::span<const double> scalar_advantages,
                                         const ClipConfig& cfg, const TabularPolicy& policy,
                                         const RefLogprobs* ref_logprobs = nullptr);

}  // namespace bae
