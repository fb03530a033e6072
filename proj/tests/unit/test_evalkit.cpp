#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "bae/common.hpp"
#include "bae/evalkit.hpp"
#include "bae/rng.hpp"

using namespace bae;

TEST_SUITE_BEGIN("evalkit");

namespace {

// Independent ECE: walk the 11 bins, filtering records per bin by explicit
// edge comparisons against m/10.
double ece_oracle(const std::vector<CalibrationRecord>& records) {
  double total = 0.0;
  for (int m = 0; m < 11; ++m) {
    const double lo = static_cast<double>(m) / 10.0;
    const double hi = static_cast<double>(m + 1) / 10.0;
    double conf = 0.0, acc = 0.0;
    long n = 0;
    for (const CalibrationRecord& r : records) {
      if (r.q >= lo && r.q < hi) {
        conf += r.q;
        acc += r.c;
        ++n;
      }
    }
    if (n == 0) continue;
    total += (static_cast<double>(n) / static_cast<double>(records.size())) *
             std::fabs(acc / n - conf / n);
  }
  return total;
}

double brier_oracle(const std::vector<CalibrationRecord>& records) {
  double total = 0.0;
  for (const CalibrationRecord& r : records) total += (r.q - r.c) * (r.q - r.c);
  return total / static_cast<double>(records.size());
}

// All-pairs Mann-Whitney count.
std::optional<double> auroc_oracle(const std::vector<CalibrationRecord>& records) {
  double wins = 0.0;
  long pairs = 0;
  for (const CalibrationRecord& pos : records) {
    if (pos.c != 1) continue;
    for (const CalibrationRecord& neg : records) {
      if (neg.c != 0) continue;
      ++pairs;
      if (pos.q > neg.q)
        wins += 1.0;
      else if (pos.q == neg.q)
        wins += 0.5;
    }
  }
  if (pairs == 0) return std::nullopt;
  return wins / static_cast<double>(pairs);
}

// Subset-enumeration Pass@k over bitmasks.
double pass_at_k_oracle(int n, int c_correct, int k) {
  long total = 0, hits = 0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != k) continue;
    ++total;
    bool any = false;
    for (int i = 0; i < c_correct; ++i)
      if (mask & (1 << i)) any = true;  // first c_correct samples are the correct ones
    if (any) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<CalibrationRecord> random_records(RngStream& rng, int n, bool with_ties) {
  std::vector<CalibrationRecord> records(static_cast<std::size_t>(n));
  for (auto& r : records) {
    r.q = with_ties ? std::floor(rng.next_double() * 5.0) / 4.0 * 0.999 : rng.next_double();
    if (r.q > 1.0) r.q = 1.0;
    r.c = rng.next_bernoulli(0.5) ? 1 : 0;
  }
  return records;
}

}  // namespace

TEST_CASE("ece worked examples") {
  const std::vector<CalibrationRecord> perfect = {{1.0, 1}, {1.0, 1}};
  CHECK(ece(perfect) == 0.0);

  const std::vector<CalibrationRecord> mixed = {{0.95, 1}, {0.95, 0}, {0.45, 0}, {0.45, 1}};
  CHECK(ece(mixed) == doctest::Approx(0.25).epsilon(1e-12));

  const std::vector<CalibrationRecord> inverted = {{1.0, 0}, {1.0, 0}};
  CHECK(ece(inverted) == 1.0);

  CHECK_THROWS_AS(ece({}), ContractError);
}

TEST_CASE("q = 1.0 lands in the eleventh bin") {
  CHECK(ece_bin(1.0) == 10);
  CHECK(ece_bin(0.999) == 9);
  CHECK(ece_bin(0.0) == 0);
  CHECK(ece_bin(0.3) == 3);
  for (int i = 0; i <= 20; ++i) {
    const double q = static_cast<double>(i) / 20.0;
    const int bin = ece_bin(q);
    CHECK(q >= static_cast<double>(bin) / 10.0);
    if (bin < 10) CHECK(q < static_cast<double>(bin + 1) / 10.0);
  }
}

TEST_CASE("ece matches the brute-force oracle exactly on random data") {
  RngStream rng(100);
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(trial));
    const auto records = random_records(sub, 1 + static_cast<int>(sub.next_below(40)),
                                        trial % 2 == 0);
    CHECK(ece(records) == ece_oracle(records));
  }
}

TEST_CASE("brier worked examples and oracle agreement") {
  const std::vector<CalibrationRecord> exact = {{1.0, 1}, {0.0, 0}};
  CHECK(brier_score(exact) == 0.0);
  const std::vector<CalibrationRecord> half = {{0.5, 1}, {0.5, 0}};
  CHECK(brier_score(half) == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<CalibrationRecord> worst = {{1.0, 0}, {1.0, 0}};
  CHECK(brier_score(worst) == 1.0);
  CHECK_THROWS_AS(brier_score({}), ContractError);

  RngStream rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(trial));
    const auto records = random_records(sub, 1 + static_cast<int>(sub.next_below(40)), false);
    CHECK(brier_score(records) == brier_oracle(records));
  }
}

TEST_CASE("auroc worked examples") {
  const std::vector<CalibrationRecord> separated = {{0.9, 1}, {0.8, 1}, {0.3, 0}};
  CHECK(auroc(separated) == 1.0);
  const std::vector<CalibrationRecord> tied = {{0.5, 1}, {0.5, 0}};
  CHECK(auroc(tied) == 0.5);
  const std::vector<CalibrationRecord> single = {{0.9, 1}, {0.8, 1}};
  CHECK_FALSE(auroc(single).has_value());
}

TEST_CASE("auroc matches all-pairs counting within 1e-12") {
  RngStream rng(102);
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(trial));
    const auto records = random_records(sub, 2 + static_cast<int>(sub.next_below(40)),
                                        trial % 2 == 0);
    const auto fast = auroc(records);
    const auto slow = auroc_oracle(records);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) CHECK(std::fabs(*fast - *slow) <= 1e-12);
  }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
  RngStream rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(trial));
    auto records = random_records(sub, 20, true);
    const auto before = auroc(records);
    for (auto& r : records) r.q = r.q * r.q * r.q;
    const auto after = auroc(records);
    REQUIRE(before.has_value() == after.has_value());
    if (before) CHECK(*before == doctest::Approx(*after).epsilon(1e-14));
  }
}

TEST_CASE("pass@k worked examples and exhaustive oracle") {
  CHECK(pass_at_k(4, 2, 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(pass_at_k(8, 0, 3) == 0.0);
  CHECK(pass_at_k(5, 1, 5) == 1.0);
  CHECK_THROWS_AS(pass_at_k(4, 2, 5), std::out_of_range);

  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k) CHECK(pass_at_k(n, c, k) == pass_at_k_oracle(n, c, k));
}

TEST_CASE("pass1 sem worked examples") {
  CHECK(pass1_sem({{1, 1}, {1, 1}}) == 0.0);
  CHECK(pass1_sem({{0}, {1}}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(pass1_sem({{1, 0, 1}}).has_value());

  // Definitional check against the direct formula.
  RngStream rng(104);
  std::vector<std::vector<int>> matrix(6, std::vector<int>(10));
  for (auto& row : matrix)
    for (int& v : row) v = rng.next_bernoulli(0.4) ? 1 : 0;
  std::vector<double> acc;
  for (const auto& row : matrix) {
    double s = 0.0;
    for (int v : row) s += v;
    acc.push_back(s / static_cast<double>(row.size()));
  }
  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= static_cast<double>(acc.size());
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  const double expected =
      std::sqrt(ss / static_cast<double>(acc.size() - 1)) / std::sqrt(6.0);
  CHECK(*pass1_sem(matrix) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("bootstrap sem basics") {
  const std::vector<CalibrationRecord> constant(12, CalibrationRecord{0.4, 0});
  RngStream rng(105);
  CHECK(*bootstrap_sem(constant, CalibrationMetric::ece, 200, rng.derive(0)) == 0.0);
  CHECK(*bootstrap_sem(constant, CalibrationMetric::brier, 200, rng.derive(1)) == 0.0);

  // Single-class data keeps auroc undefined in every iteration.
  int undefined = 0;
  const auto sem =
      bootstrap_sem(constant, CalibrationMetric::auroc, 50, rng.derive(2), 1, &undefined);
  CHECK_FALSE(sem.has_value());
  CHECK(undefined == 50);

  // Seed determinism, independent of thread count.
  RngStream a(9), b(9);
  const auto records = random_records(a, 30, false);
  RngStream c(9);
  const auto records2 = random_records(c, 30, false);
  const auto s1 = bootstrap_sem(records, CalibrationMetric::brier, 300, RngStream(1), 1);
  const auto s2 = bootstrap_sem(records2, CalibrationMetric::brier, 300, RngStream(1), 4);
  CHECK(*s1 == *s2);
}

TEST_CASE("bootstrap sem approaches the exhaustive resampling distribution") {
  // Oracle: enumerate all n^n index sequences, the exact bootstrap law.
  RngStream rng(106);
  for (int trial = 0; trial < 3; ++trial) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(trial));
    const int n = 5;
    const auto records = random_records(sub, n, false);
    std::vector<double> values;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<CalibrationRecord> resample;
      for (std::size_t i : idx) resample.push_back(records[i]);
      values.push_back(brier_score(resample));
      int pos = n - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] ==
                             static_cast<std::size_t>(n - 1)) {
        idx[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double exact = std::sqrt(ss / static_cast<double>(values.size()));

    const auto estimate =
        bootstrap_sem(records, CalibrationMetric::brier, 4000, sub.derive(99));
    CHECK(std::fabs(*estimate - exact) <= 0.1 * exact);
  }
}

TEST_CASE("aggregation worked examples") {
  const std::vector<Candidate> candidates = {{0, 0.3, 1}, {0, 0.3, 1}, {1, 0.5, 0}};
  CHECK(aggregate(candidates, AggregationStrategy::majority) == 0);
  CHECK(aggregate(candidates, AggregationStrategy::max_confidence) == 1);
  CHECK(aggregate(candidates, AggregationStrategy::weighted_majority) == 0);

  const std::vector<Candidate> lone = {{7, 0.1, 0}};
  for (auto strategy : {AggregationStrategy::majority, AggregationStrategy::max_confidence,
                        AggregationStrategy::weighted_majority})
    CHECK(aggregate(lone, strategy) == 7);
}

TEST_CASE("ties break toward the lowest answer id") {
  const std::vector<Candidate> tied = {{3, 0.4, 0}, {1, 0.4, 0}, {3, 0.2, 0}, {1, 0.2, 0}};
  CHECK(aggregate(tied, AggregationStrategy::majority) == 1);
  CHECK(aggregate(tied, AggregationStrategy::weighted_majority) == 1);
  CHECK(aggregate(tied, AggregationStrategy::max_confidence) == 1);
}

TEST_CASE("weighted majority equals exhaustive scoring on random sets") {
  RngStream rng(107);
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(trial));
    const int n = 1 + static_cast<int>(sub.next_below(12));
    std::vector<Candidate> candidates(static_cast<std::size_t>(n));
    for (auto& cand : candidates) {
      cand.answer_id = static_cast<int>(sub.next_below(5));
      cand.q = sub.next_double();
    }
    // Oracle: argmax over summed weights, lowest id on ties.
    std::map<int, double> weight;
    for (const auto& cand : candidates) weight[cand.answer_id] += cand.q;
    int best = -1;
    double best_weight = -1.0;
    for (const auto& [answer, w] : weight)
      if (w > best_weight) {
        best = answer;
        best_weight = w;
      }
    CHECK(aggregate(candidates, AggregationStrategy::weighted_majority) == best);

    // Equal confidences collapse weighted majority onto plain majority.
    std::vector<Candidate> equal = candidates;
    for (auto& cand : equal) cand.q = 0.37;
    CHECK(aggregate(equal, AggregationStrategy::weighted_majority) ==
          aggregate(equal, AggregationStrategy::majority));
  }
}

TEST_CASE("majority accuracy trends upward with more samples") {
  // Symmetric synthetic prompts: the right answer appears w.p. 0.55, two
  // decoys split the rest. Monte-Carlo trend only.
  RngStream rng(108);
  auto accuracy_at = [&](int n) {
    int correct = 0;
    const int prompts = 4000;
    for (int p = 0; p < prompts; ++p) {
      RngStream sub = rng.derive(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p));
      std::vector<Candidate> candidates;
      for (int i = 0; i < n; ++i) {
        const double u = sub.next_double();
        const int answer = u < 0.55 ? 0 : (u < 0.775 ? 1 : 2);
        candidates.push_back({answer, 0.5, answer == 0 ? 1 : 0});
      }
      if (aggregate(candidates, AggregationStrategy::majority) == 0) ++correct;
    }
    return static_cast<double>(correct) / prompts;
  };
  CHECK(accuracy_at(9) > accuracy_at(1) + 0.05);
}

TEST_CASE("sample-set validation enforces the shared verifier") {
  std::vector<PromptSamples> set(1);
  set[0].prompt_id = "p0";
  set[0].candidates = {{2, 0.5, 1}, {2, 0.9, 0}};
  const auto violations = validate_sample_set(set);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("inconsistent verifier") != std::string::npos);

  set[0].candidates = {{2, 0.5, 1}, {2, 0.9, 1}, {3, 0.2, 0}};
  CHECK(validate_sample_set(set).empty());
}

TEST_SUITE_END();
