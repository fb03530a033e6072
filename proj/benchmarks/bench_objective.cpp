#include <benchmark/benchmark.h>

#include "bae/objective.hpp"
#include "bae/rng.hpp"

namespace {

struct Fixture {
  bae::EnvSpec env = bae::EnvSpec::confidence_task({0.3, 0.7}, 3, 21);
  bae::TabularPolicy policy{env};
  bae::RolloutGroup group;
  bae::AdvantageTable adv;
  bae::ClipConfig cfg;

  explicit Fixture(int group_size) {
    bae::RngStream rng(7);
    for (double& v : policy.params()) v = rng.next_double() - 0.5;
    policy.snapshot_old();
    group = bae::sample_group(env, policy, 0, group_size, "p", bae::RewardKind::brier,
                              rng.derive(1));
    for (double& v : policy.params()) v += 0.05 * (rng.next_double() - 0.5);
    adv = bae::compute_blockwise_advantages(group, bae::BaselineKind::outcome_conditioned(0.0),
                                            bae::NormalizationMode::center_only());
  }
};

void BM_BaeLoss(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  const bae::RolloutGroup fresh = bae::refresh_new_logprobs(f.env, f.policy, 0, f.group);
  for (auto _ : state) benchmark::DoNotOptimize(bae::bae_loss(fresh, f.adv, f.cfg));
}
BENCHMARK(BM_BaeLoss)->Arg(32)->Arg(256);

void BM_BaePolicyGradient(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        bae::bae_policy_gradient(f.group, 0, f.env, f.adv, f.cfg, f.policy));
}
BENCHMARK(BM_BaePolicyGradient)->Arg(32)->Arg(256);

}  // namespace
