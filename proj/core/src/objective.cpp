#include "bae/objective.hpp"

#include <algorithm>
#include <cmath>

#include "bae/common.hpp"

namespace bae {

void ClipConfig::check_valid() const {
  if (!(eps_clip > 0.0 && eps_clip < 1.0)) throw ConfigError("eps_clip must lie in (0,1)");
  if (beta_kl < 0.0) throw ConfigError("beta_kl must be >= 0");
  for (double w : block_weights)
    if (w < 0.0) throw ConfigError("block weights must be >= 0");
}

double token_ratio(const TokenRecord& rec) {
  return std::exp(rec.logprob_new - rec.logprob_old);
}

namespace {

// min(rho*A, clip(rho)*A) for one token.
double clipped_term(double rho, double advantage, double eps_clip) {
  const double clipped = std::clamp(rho, 1.0 - eps_clip, 1.0 + eps_clip);
  return std::min(rho * advantage, clipped * advantage);
}

void check_adv_cover(const RolloutGroup& group, const AdvantageTable& adv) {
  if (adv.num_rollouts() != group.size() || adv.num_blocks() != group.num_blocks())
    throw ContractError("advantage table does not cover the group");
}

void check_ref_cover(const RolloutGroup& group, const RefLogprobs* ref) {
  if (!ref) throw ConfigError("beta_kl > 0 requires reference logprobs");
  if (static_cast<int>(ref->size()) != group.size())
    throw ContractError("reference logprobs do not cover the group");
  for (int i = 0; i < group.size(); ++i)
    if (static_cast<int>((*ref)[static_cast<std::size_t>(i)].size()) !=
        group.rollouts[static_cast<std::size_t>(i)].total_tokens())
      throw ContractError("reference logprobs do not cover rollout " + std::to_string(i + 1));
}

}  // namespace

double bae_loss(const RolloutGroup& group, const AdvantageTable& adv, const ClipConfig& cfg) {
  cfg.check_valid();
  check_adv_cover(group, adv);
  const double g = static_cast<double>(group.size());
  double total = 0.0;
  for (int i = 0; i < group.size(); ++i) {
    const SegmentedRollout& rollout = group.rollouts[static_cast<std::size_t>(i)];
    for (const Block& block : rollout.blocks) {
      const double a = adv.at(i, block.index_k);
      const double w = cfg.weight(block.index_k);
      double block_sum = 0.0;
      for (const TokenRecord& t : block.tokens)
        block_sum += clipped_term(token_ratio(t), a, cfg.eps_clip);
      total += w * block_sum / static_cast<double>(block.tokens.size());
    }
  }
  return -total / g;
}

double grpo_loss(const RolloutGroup& group, std::span<const double> scalar_advantages,
                 const ClipConfig& cfg, const RefLogprobs* ref_logprobs) {
  cfg.check_valid();
  if (static_cast<int>(scalar_advantages.size()) != group.size())
    throw ContractError("one scalar advantage per rollout is required");
  if (cfg.beta_kl > 0.0) check_ref_cover(group, ref_logprobs);

  const double g = static_cast<double>(group.size());
  double total = 0.0;
  for (int i = 0; i < group.size(); ++i) {
    const SegmentedRollout& rollout = group.rollouts[static_cast<std::size_t>(i)];
    const double a = scalar_advantages[static_cast<std::size_t>(i)];
    std::size_t flat = 0;
    for (const Block& block : rollout.blocks) {
      for (const TokenRecord& t : block.tokens) {
        double term = clipped_term(token_ratio(t), a, cfg.eps_clip);
        if (cfg.beta_kl > 0.0)
          term -= cfg.beta_kl *
                  (t.logprob_new - (*ref_logprobs)[static_cast<std::size_t>(i)][flat]);
        total += term;
        ++flat;
      }
    }
  }
  return -total / g;
}

namespace {

// Shared gradient walk. `scale(i, k, block_len)` is the factor multiplying
// the token's min(...) term inside the loss (sign included); `kl_scale` the
// factor on the per-token KL penalty (0 disables it).
std::vector<double> policy_gradient_impl(
    const RolloutGroup& group, int prompt_class, const EnvSpec& env, const ClipConfig& cfg,
    const TabularPolicy& policy,
    const std::function<double(int i, int k, std::size_t block_len)>& scale,
    const std::function<double(int i, int k)>& advantage, double kl_scale) {
  std::vector<double> grad(static_cast<std::size_t>(policy.param_count()), 0.0);

  for (int i = 0; i < group.size(); ++i) {
    const SegmentedRollout& rollout = group.rollouts[static_cast<std::size_t>(i)];
    std::size_t token_index = 0;
    std::vector<std::size_t> block_len(static_cast<std::size_t>(rollout.num_blocks()));
    for (const Block& b : rollout.blocks)
      block_len[static_cast<std::size_t>(b.index_k - 1)] = b.tokens.size();

    // Old logprobs in block-major order, to form ratios against fresh ones.
    std::vector<double> old_lp;
    old_lp.reserve(static_cast<std::size_t>(rollout.total_tokens()));
    for (const Block& b : rollout.blocks)
      for (const TokenRecord& t : b.tokens) old_lp.push_back(t.logprob_old);

    for_each_token_slice(env, policy, prompt_class, rollout, [&](const TokenSlice& s) {
      const double lp_new = policy.log_prob_at(s.offset, s.width, s.symbol, /*use_old=*/false);
      const double rho = std::exp(lp_new - old_lp[token_index]);
      const double a = advantage(i, s.block_k);
      const double unclipped = rho * a;
      const double clipped = std::clamp(rho, 1.0 - cfg.eps_clip, 1.0 + cfg.eps_clip) * a;

      // d(min)/d(rho): the unclipped branch keeps its full gradient; inside
      // the clip interval both branches coincide; a dominating clipped
      // branch beyond the boundary is constant in theta.
      double coeff = 0.0;
      if (unclipped <= clipped) {
        coeff = a * rho;
      } else if (rho > 1.0 - cfg.eps_clip && rho < 1.0 + cfg.eps_clip) {
        coeff = a * rho;
      }
      const double factor = scale(i, s.block_k, block_len[static_cast<std::size_t>(s.block_k - 1)]);
      const double outer = factor * coeff;

      if (outer != 0.0 || kl_scale != 0.0) {
        const std::vector<double> probs = policy.probs_at(s.offset, s.width, /*use_old=*/false);
        for (int u = 0; u < s.width; ++u) {
          const double dlp =
              (u == s.symbol ? 1.0 : 0.0) - probs[static_cast<std::size_t>(u)];
          double g = outer * dlp;
          if (kl_scale != 0.0) g += kl_scale * dlp;
          grad[static_cast<std::size_t>(s.offset + u)] += g;
        }
      }
      ++token_index;
    });
  }
  return grad;
}

}  // namespace

std::vector<double> bae_policy_gradient(const RolloutGroup& group, int prompt_class,
                                        const EnvSpec& env, const AdvantageTable& adv,
                                        const ClipConfig& cfg, const TabularPolicy& policy) {
  cfg.check_valid();
  check_adv_cover(group, adv);
  const double g = static_cast<double>(group.size());
  return policy_gradient_impl(
      group, prompt_class, env, cfg, policy,
      [&](int, int k, std::size_t len) {
        return -cfg.weight(k) / (g * static_cast<double>(len));
      },
      [&](int i, int k) { return adv.at(i, k); }, /*kl_scale=*/0.0);
}

std::vector<double> grpo_policy_gradient(const RolloutGroup& group, int prompt_class,
                                         const EnvSpec& env,
                                         std::span<const double> scalar_advantages,
                                         const ClipConfig& cfg, const TabularPolicy& policy,
                                         const RefLogprobs* ref_logprobs) {
  cfg.check_valid();
  if (static_cast<int>(scalar_advantages.size()) != group.size())
    throw ContractError("one scalar advantage per rollout is required");
  if (cfg.beta_kl > 0.0) check_ref_cover(group, ref_logprobs);
  const double g = static_cast<double>(group.size());
  // loss = -(1/G) sum min(...) + (beta/G) sum (lp_new - lp_ref); the KL part
  // contributes +beta/G per token regardless of ref values.
  return policy_gradient_impl(
      group, prompt_class, env, cfg, policy, [&](int, int, std::size_t) { return -1.0 / g; },
      [&](int i, int) { return scalar_advantages[static_cast<std::size_t>(i)]; },
      cfg.beta_kl > 0.0 ? cfg.beta_kl / g : 0.0);
}

}  // namespace bae
