#include <benchmark/benchmark.h>

#include "bae/env.hpp"
#include "bae/mc_oracle.hpp"
#include "bae/rng.hpp"

namespace {

void BM_SampleGroup(benchmark::State& state) {
  const bae::EnvSpec env = bae::EnvSpec::confidence_task({0.3, 0.7}, 3, 21);
  const bae::TabularPolicy policy = bae::TabularPolicy::calibrated(env, 8.0);
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto group = bae::sample_group(env, policy, 0, static_cast<int>(state.range(0)), "p",
                                   bae::RewardKind::brier, bae::RngStream(i++));
    benchmark::DoNotOptimize(group);
  }
}
BENCHMARK(BM_SampleGroup)->Arg(32)->Arg(64);

void BM_McConditionalValue(benchmark::State& state) {
  const bae::EnvSpec env = bae::EnvSpec::confidence_task({0.5}, 3, 21);
  const bae::TabularPolicy policy = bae::TabularPolicy::calibrated(env, 8.0);
  std::uint64_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(bae::mc_conditional_value(
        env, policy, 0, 0, 1, bae::RewardKind::brier, static_cast<int>(state.range(0)),
        bae::RngStream(i++)));
}
BENCHMARK(BM_McConditionalValue)->Arg(32)->Arg(512);

}  // namespace
