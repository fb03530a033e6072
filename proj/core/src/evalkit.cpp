#include "bae/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bae/common.hpp"
#include "bae/parallel.hpp"

namespace bae {

int ece_bin(double q) {
  // Edges are m/10; membership is [m/10, (m+1)/10) with 1.0 in bin 10.
  for (int m = 10; m >= 1; --m)
    if (q >= static_cast<double>(m) / 10.0) return m;
  return 0;
}

double ece(std::span<const CalibrationRecord> records) {
  if (records.empty()) throw ContractError("ece: empty input");
  double conf_sum[kEceBins] = {};
  double acc_sum[kEceBins] = {};
  long count[kEceBins] = {};
  for (const CalibrationRecord& r : records) {
    const int m = ece_bin(r.q);
    conf_sum[m] += r.q;
    acc_sum[m] += static_cast<double>(r.c);
    ++count[m];
  }
  const double n = static_cast<double>(records.size());
  double total = 0.0;
  for (int m = 0; m < kEceBins; ++m) {
    if (count[m] == 0) continue;
    const double acc = acc_sum[m] / static_cast<double>(count[m]);
    const double conf = conf_sum[m] / static_cast<double>(count[m]);
    total += (static_cast<double>(count[m]) / n) * std::fabs(acc - conf);
  }
  return total;
}

double brier_score(std::span<const CalibrationRecord> records) {
  if (records.empty()) throw ContractError("brier_score: empty input");
  double total = 0.0;
  for (const CalibrationRecord& r : records) {
    const double d = r.q - static_cast<double>(r.c);
    total += d * d;
  }
  return total / static_cast<double>(records.size());
}

std::optional<double> auroc(std::span<const CalibrationRecord> records) {
  long n_pos = 0, n_neg = 0;
  for (const CalibrationRecord& r : records) (r.c == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return records[a].q < records[b].q; });

  // Average ranks over tied confidence values, then the Mann-Whitney U.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && records[order[j]].q == records[order[i]].q) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t)
      if (records[order[t]].c == 1) pos_rank_sum += avg_rank;
    i = j;
  }
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) *
                                      (static_cast<double>(n_pos) + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::string to_string(CalibrationMetric metric) {
  switch (metric) {
    case CalibrationMetric::ece: return "ece";
    case CalibrationMetric::brier: return "brier";
    case CalibrationMetric::auroc: return "auroc";
  }
  return "?";
}

std::optional<double> bootstrap_sem(std::span<const CalibrationRecord> records,
                                    CalibrationMetric metric, int iterations, RngStream rng,
                                    int threads, int* undefined_iterations) {
  if (records.empty()) throw ContractError("bootstrap_sem: empty input");
  if (iterations < 1) throw ContractError("bootstrap_sem: iterations must be >= 1");

  std::vector<std::optional<double>> values(static_cast<std::size_t>(iterations));
  parallel_for(0, iterations, threads, [&](int it) {
    RngStream sub = rng.derive(static_cast<std::uint64_t>(it));
    std::vector<CalibrationRecord> resample(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
      resample[i] = records[sub.next_below(records.size())];
    switch (metric) {
      case CalibrationMetric::ece: values[static_cast<std::size_t>(it)] = ece(resample); break;
      case CalibrationMetric::brier:
        values[static_cast<std::size_t>(it)] = brier_score(resample);
        break;
      case CalibrationMetric::auroc:
        values[static_cast<std::size_t>(it)] = auroc(resample);
        break;
    }
  });

  std::vector<double> defined;
  defined.reserve(values.size());
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  if (undefined_iterations)
    *undefined_iterations = iterations - static_cast<int>(defined.size());
  if (defined.empty()) return std::nullopt;
  if (defined.size() == 1) return 0.0;
  // A constant bootstrap distribution has zero spread; skip the mean
  // round-off that would otherwise leak in.
  if (std::all_of(defined.begin(), defined.end(),
                  [&](double v) { return v == defined.front(); }))
    return 0.0;

  double mean = 0.0;
  for (double v : defined) mean += v;
  mean /= static_cast<double>(defined.size());
  double ss = 0.0;
  for (double v : defined) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(defined.size() - 1));
}

std::optional<double> pass1_sem(const std::vector<std::vector<int>>& correctness_matrix) {
  const std::size_t n = correctness_matrix.size();
  if (n < 2) return std::nullopt;
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (correctness_matrix[i].empty()) throw ContractError("pass1_sem: empty evaluation row");
    double sum = 0.0;
    for (int c : correctness_matrix[i]) sum += static_cast<double>(c);
    acc[i] = sum / static_cast<double>(correctness_matrix[i].size());
  }
  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return sd / std::sqrt(static_cast<double>(n));
}

namespace {

// Exact binomial coefficient; inputs stay small enough for uint64.
std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i)
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return result;
}

}  // namespace

double pass_at_k(int n, int c_correct, int k) {
  if (n < 1 || c_correct < 0 || c_correct > n) throw ContractError("pass_at_k: bad n or c");
  if (k < 1 || k > n) throw std::out_of_range("pass_at_k: k outside [1, n]");
  const std::uint64_t total = binomial(n, k);
  const std::uint64_t all_wrong = binomial(n - c_correct, k);
  return static_cast<double>(total - all_wrong) / static_cast<double>(total);
}

std::vector<std::string> validate_sample_set(std::span<const PromptSamples> sample_set) {
  std::vector<std::string> violations;
  for (const PromptSamples& prompt : sample_set) {
    if (prompt.candidates.empty())
      violations.push_back("prompt '" + prompt.prompt_id + "' has no candidates");
    std::map<int, int> verdicts;
    for (const Candidate& cand : prompt.candidates) {
      if (!(cand.q >= 0.0 && cand.q <= 1.0))
        violations.push_back("confidence out of [0,1] (prompt '" + prompt.prompt_id + "')");
      if (cand.c != 0 && cand.c != 1)
        violations.push_back("correctness not in {0,1} (prompt '" + prompt.prompt_id + "')");
      auto [it, inserted] = verdicts.emplace(cand.answer_id, cand.c);
      if (!inserted && it->second != cand.c)
        violations.push_back("inconsistent verifier for answer " +
                             std::to_string(cand.answer_id) + " (prompt '" + prompt.prompt_id +
                             "')");
    }
  }
  return violations;
}

std::string to_string(AggregationStrategy s) {
  switch (s) {
    case AggregationStrategy::majority: return "maj";
    case AggregationStrategy::max_confidence: return "maxconf";
    case AggregationStrategy::weighted_majority: return "weighted_maj";
  }
  return "?";
}

int aggregate(std::span<const Candidate> candidates, AggregationStrategy strategy) {
  if (candidates.empty()) throw ContractError("aggregate: no candidates");
  switch (strategy) {
    case AggregationStrategy::max_confidence: {
      const Candidate* best = &candidates[0];
      for (const Candidate& cand : candidates.subspan(1)) {
        if (cand.q > best->q || (cand.q == best->q && cand.answer_id < best->answer_id))
          best = &cand;
      }
      return best->answer_id;
    }
    case AggregationStrategy::majority:
    case AggregationStrategy::weighted_majority: {
      std::map<int, double> score;  // answer id -> count or summed confidence
      for (const Candidate& cand : candidates)
        score[cand.answer_id] +=
            strategy == AggregationStrategy::majority ? 1.0 : cand.q;
      int best_answer = score.begin()->first;
      double best_score = score.begin()->second;
      for (const auto& [answer, s] : score) {
        if (s > best_score) {  // map order means ties keep the lowest id
          best_answer = answer;
          best_score = s;
        }
      }
      return best_answer;
    }
  }
  throw ContractError("aggregate: unknown strategy");
}

}  // namespace bae
