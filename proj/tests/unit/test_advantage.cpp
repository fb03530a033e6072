#include <doctest.h>

#include <cmath>
#include <vector>

#include "bae/advantage.hpp"
#include "bae/common.hpp"
#include "bae/rng.hpp"

using namespace bae;

TEST_SUITE_BEGIN("advantage");

namespace {

// Minimal group with given per-block rewards and block-2 outcomes; token
// content is irrelevant to the advantage engine.
RolloutGroup reward_group(const std::vector<std::vector<double>>& block_rewards,
                          const std::vector<std::string>& outcomes2) {
  RolloutGroup g;
  g.prompt_id = "p";
  g.outcome_labels = {outcome::kCorrect, outcome::kIncorrect};
  g.vocab_size = 2;
  for (std::size_t i = 0; i < block_rewards.size(); ++i) {
    SegmentedRollout r;
    r.prompt_id = "p";
    for (std::size_t k = 0; k < block_rewards[i].size(); ++k) {
      Block b;
      b.index_k = static_cast<int>(k) + 1;
      b.tokens = {{0, -0.5, -0.5}};
      b.reward = block_rewards[i][k];
      r.blocks.push_back(std::move(b));
      if (k > 0) r.outcomes[static_cast<int>(k) + 1] = OutcomeLabel{outcomes2[i]};
    }
    g.rollouts.push_back(std::move(r));
  }
  return g;
}

RolloutGroup random_group(RngStream& rng, int g_size, int k_blocks) {
  std::vector<std::vector<double>> rewards(static_cast<std::size_t>(g_size));
  std::vector<std::string> outcomes(static_cast<std::size_t>(g_size));
  for (int i = 0; i < g_size; ++i) {
    for (int k = 0; k < k_blocks; ++k)
      rewards[static_cast<std::size_t>(i)].push_back(rng.next_double() * 2.0 - 1.0);
    outcomes[static_cast<std::size_t>(i)] =
        rng.next_bernoulli(0.5) ? outcome::kCorrect : outcome::kIncorrect;
  }
  return reward_group(rewards, outcomes);
}

}  // namespace

TEST_CASE("grpo scalar advantages: center and scale variants") {
  const std::vector<double> r = {1.0, 1.0, 0.0, 0.0};
  const auto centered = grpo_scalar_advantages(r, NormalizationMode::center_only());
  CHECK(centered == std::vector<double>{0.5, 0.5, -0.5, -0.5});

  const auto scaled = grpo_scalar_advantages(r, NormalizationMode::center_and_scale(1e-15));
  for (std::size_t i = 0; i < scaled.size(); ++i)
    CHECK(scaled[i] == doctest::Approx(i < 2 ? 1.0 : -1.0).epsilon(1e-9));

  const std::vector<double> constant = {0.3, 0.3, 0.3};
  for (double a : grpo_scalar_advantages(constant, NormalizationMode::center_only()))
    CHECK(a == 0.0);

  CHECK_THROWS_AS(grpo_scalar_advantages({}, NormalizationMode::center_only()), ContractError);
  CHECK_THROWS_AS(grpo_scalar_advantages(std::vector<double>{1.0},
                                         NormalizationMode::center_and_scale()),
                  ContractError);
}

TEST_CASE("block baselines match the worked examples") {
  const std::vector<double> r = {-0.04, -0.25, -0.81, -0.09};
  const std::vector<OutcomeLabel> o = {{outcome::kCorrect},
                                       {outcome::kCorrect},
                                       {outcome::kIncorrect},
                                       {outcome::kIncorrect}};

  const auto ocb = block_baselines(r, o, BaselineKind::outcome_conditioned(0.0));
  CHECK(ocb[0] == doctest::Approx(-0.145).epsilon(1e-12));
  CHECK(ocb[1] == doctest::Approx(-0.145).epsilon(1e-12));
  CHECK(ocb[2] == doctest::Approx(-0.45).epsilon(1e-12));
  CHECK(ocb[3] == doctest::Approx(-0.45).epsilon(1e-12));

  const auto gm = block_baselines(r, o, BaselineKind::group_mean());
  for (double b : gm) CHECK(b == doctest::Approx(-0.2975).epsilon(1e-12));

  // Singleton stratum: the self-mean makes the advantage vanish.
  const std::vector<double> single = {0.3};
  const std::vector<OutcomeLabel> single_o = {{outcome::kIncorrect}};
  CHECK(block_baselines(single, single_o, BaselineKind::outcome_conditioned(0.0))[0] == 0.3);

  const auto batch = block_baselines(r, o, BaselineKind::batch_mean(), -0.5);
  for (double b : batch) CHECK(b == -0.5);

  CHECK_THROWS_AS(block_baselines(r, {}, BaselineKind::outcome_conditioned(0.0)), ConfigError);
  CHECK_THROWS_AS(block_baselines(r, o, BaselineKind::batch_mean()), ConfigError);
}

TEST_CASE("blockwise advantages match the worked examples") {
  SUBCASE("singleton strata zero out block 2") {
    const RolloutGroup g = reward_group({{1.0, -0.04}, {0.0, -0.81}},
                                        {outcome::kCorrect, outcome::kIncorrect});
    const AdvantageTable t = compute_blockwise_advantages(
        g, BaselineKind::outcome_conditioned(0.0), NormalizationMode::center_only());
    CHECK(t.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.at(1, 1) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(t.at(0, 2) == 0.0);
    CHECK(t.at(1, 2) == 0.0);
  }
  SUBCASE("four-rollout OCB example") {
    const RolloutGroup g = reward_group(
        {{1.0, -0.04}, {1.0, -0.25}, {0.0, -0.81}, {0.0, -0.09}},
        {outcome::kCorrect, outcome::kCorrect, outcome::kIncorrect, outcome::kIncorrect});
    const AdvantageTable t = compute_blockwise_advantages(
        g, BaselineKind::outcome_conditioned(0.0), NormalizationMode::center_only());
    CHECK(t.at(0, 2) == doctest::Approx(0.105).epsilon(1e-12));
    CHECK(t.at(1, 2) == doctest::Approx(-0.105).epsilon(1e-12));
    CHECK(t.at(2, 2) == doctest::Approx(-0.36).epsilon(1e-12));
    CHECK(t.at(3, 2) == doctest::Approx(0.36).epsilon(1e-12));
  }
  SUBCASE("K=1 group reduces to per-block group-mean centering") {
    const RolloutGroup g = reward_group({{1.0}, {0.0}, {0.5}}, {});
    for (BaselineKind kind : {BaselineKind::none(), BaselineKind::group_mean(),
                              BaselineKind::outcome_conditioned(0.0)}) {
      const AdvantageTable t =
          compute_blockwise_advantages(g, kind, NormalizationMode::center_only());
      CHECK(t.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(t.at(1, 1) == doctest::Approx(-0.5).epsilon(1e-12));
      CHECK(t.at(2, 1) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("advantage algebra holds on random groups") {
  RngStream rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream trial_rng = rng.derive(static_cast<std::uint64_t>(trial));
    const int g_size = 2 + static_cast<int>(trial_rng.next_below(7));
    RolloutGroup g = random_group(trial_rng, g_size, 2);

    // Group-mean zero sum per block.
    const AdvantageTable gm = compute_blockwise_advantages(g, BaselineKind::group_mean(),
                                                           NormalizationMode::center_only());
    for (int k = 1; k <= 2; ++k) {
      double sum = 0.0;
      for (int i = 0; i < g_size; ++i) sum += gm.at(i, k);
      CHECK(std::fabs(sum) <= 1e-12 * std::max(1.0, std::fabs(sum)) + 1e-12);
    }

    // OCB stratum zero sum at lambda = 0.
    const AdvantageTable ocb = compute_blockwise_advantages(
        g, BaselineKind::outcome_conditioned(0.0), NormalizationMode::center_only());
    for (const std::string& label : {outcome::kCorrect, outcome::kIncorrect}) {
      double sum = 0.0;
      for (int i = 0; i < g_size; ++i)
        if (g.rollouts[static_cast<std::size_t>(i)].outcomes.at(2).value == label)
          sum += ocb.at(i, 2);
      CHECK(std::fabs(sum) <= 1e-12);
    }

    // lambda = 1 coincides with the group mean exactly.
    const AdvantageTable blended = compute_blockwise_advantages(
        g, BaselineKind::outcome_conditioned(1.0), NormalizationMode::center_only());
    for (int i = 0; i < g_size; ++i)
      for (int k = 1; k <= 2; ++k) CHECK(blended.at(i, k) == gm.at(i, k));

    // No baseline keeps raw rewards on blocks k > 1.
    const AdvantageTable raw = compute_blockwise_advantages(g, BaselineKind::none(),
                                                            NormalizationMode::center_only());
    for (int i = 0; i < g_size; ++i)
      CHECK(raw.at(i, 2) == g.rollouts[static_cast<std::size_t>(i)].blocks[1].reward);

    // Locality: perturbing one rollout's block-2 reward leaves block 1
    // untouched and, under OCB, leaves the other stratum untouched.
    RolloutGroup perturbed = g;
    perturbed.rollouts[0].blocks[1].reward += 0.37;
    const std::string moved_label = perturbed.rollouts[0].outcomes.at(2).value;
    const AdvantageTable ocb2 = compute_blockwise_advantages(
        perturbed, BaselineKind::outcome_conditioned(0.0), NormalizationMode::center_only());
    for (int i = 0; i < g_size; ++i) {
      CHECK(ocb2.at(i, 1) == ocb.at(i, 1));
      if (g.rollouts[static_cast<std::size_t>(i)].outcomes.at(2).value != moved_label)
        CHECK(ocb2.at(i, 2) == ocb.at(i, 2));
    }
  }
}

TEST_CASE("singleton strata never need a special case") {
  RngStream rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    RngStream trial_rng = rng.derive(static_cast<std::uint64_t>(trial));
    const int g_size = 2 + static_cast<int>(trial_rng.next_below(5));
    RolloutGroup g = random_group(trial_rng, g_size, 2);
    // Force rollout 0 into a stratum of its own.
    g.rollouts[0].outcomes[2] = OutcomeLabel{outcome::kCorrect};
    for (int i = 1; i < g_size; ++i)
      g.rollouts[static_cast<std::size_t>(i)].outcomes[2] = OutcomeLabel{outcome::kIncorrect};
    const AdvantageTable t = compute_blockwise_advantages(
        g, BaselineKind::outcome_conditioned(0.0), NormalizationMode::center_only());
    CHECK(t.at(0, 2) == 0.0);
  }
}

TEST_CASE("center_and_scale divides by the per-block population sigma") {
  const RolloutGroup g = reward_group({{1.0, 0.2}, {0.0, 0.6}},
                                      {outcome::kCorrect, outcome::kCorrect});
  const AdvantageTable t = compute_blockwise_advantages(g, BaselineKind::group_mean(),
                                                        NormalizationMode::center_and_scale(0.0));
  CHECK(t.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.at(1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(t.at(0, 2) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(t.at(1, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batch means are per block over every rollout in the batch") {
  const RolloutGroup g1 = reward_group({{1.0, 0.0}, {0.0, 1.0}},
                                       {outcome::kCorrect, outcome::kIncorrect});
  const RolloutGroup g2 = reward_group({{1.0, 1.0}, {1.0, 1.0}},
                                       {outcome::kCorrect, outcome::kCorrect});
  const std::vector<RolloutGroup> batch = {g1, g2};
  const std::vector<double> means = batch_block_means(batch);
  CHECK(means[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(means[1] == doctest::Approx(0.75).epsilon(1e-12));

  const AdvantageTable t = compute_blockwise_advantages(g1, BaselineKind::batch_mean(),
                                                        NormalizationMode::center_only(), means);
  CHECK(t.at(0, 2) == doctest::Approx(-0.75).epsilon(1e-12));
  CHECK(t.at(1, 2) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_SUITE_END();
