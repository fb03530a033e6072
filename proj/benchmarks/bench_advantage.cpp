#include <benchmark/benchmark.h>

#include "bae/advantage.hpp"
#include "bae/env.hpp"
#include "bae/rng.hpp"

namespace {

bae::RolloutGroup sample_for(int group_size) {
  const bae::EnvSpec env = bae::EnvSpec::confidence_task({0.3, 0.7}, 3, 21);
  const bae::TabularPolicy policy = bae::TabularPolicy::calibrated(env, 8.0);
  return bae::sample_group(env, policy, 0, group_size, "p", bae::RewardKind::brier,
                           bae::RngStream(1));
}

void BM_BlockwiseAdvantagesOCB(benchmark::State& state) {
  const bae::RolloutGroup group = sample_for(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto table = bae::compute_blockwise_advantages(group,
                                                   bae::BaselineKind::outcome_conditioned(0.0),
                                                   bae::NormalizationMode::center_only());
    benchmark::DoNotOptimize(table);
  }
}
BENCHMARK(BM_BlockwiseAdvantagesOCB)->Arg(8)->Arg(32)->Arg(64)->Arg(256);

void BM_BlockwiseAdvantagesGroupMean(benchmark::State& state) {
  const bae::RolloutGroup group = sample_for(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto table = bae::compute_blockwise_advantages(group, bae::BaselineKind::group_mean(),
                                                   bae::NormalizationMode::center_only());
    benchmark::DoNotOptimize(table);
  }
}
BENCHMARK(BM_BlockwiseAdvantagesGroupMean)->Arg(32)->Arg(256);

}  // namespace
