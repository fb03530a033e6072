#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bae/rewards.hpp"
#include "bae/rng.hpp"

namespace bae {

// Expected calibration error over 11 fixed-width bins
// [0,0.1), ..., [0.9,1.0), [1.0,1.1); q = 1.0 falls in the last bin.
double ece(std::span<const CalibrationRecord> records);

// Bin index (0..10) of a confidence value under the fixed-width scheme.
int ece_bin(double q);
inline constexpr int kEceBins = 11;

// Mean squared error between confidence and correctness, in [0, 1].
double brier_score(std::span<const CalibrationRecord> records);

// Mann-Whitney probability P(q_pos > q_neg) + 0.5 P(tie) via average ranks.
// Empty when either class is absent.
std::optional<double> auroc(std::span<const CalibrationRecord> records);

enum class CalibrationMetric { ece, brier, auroc };
std::string to_string(CalibrationMetric metric);

// Standard error of a calibration metric via bootstrap resampling of the
// (q, c) pairs: the standard deviation of the metric across `iterations`
// resamples. Iterations where the metric is undefined are dropped and
// counted in `undefined_iterations`; if all are undefined the result is
// empty. Iterations draw from per-index substreams, so any parallelism
// degree gives identical results.
std::optional<double> bootstrap_sem(std::span<const CalibrationRecord> records,
                                    CalibrationMetric metric, int iterations, RngStream rng,
                                    int threads = 1, int* undefined_iterations = nullptr);

// SEM of Pass@1 over combination-level evaluations: rows are evaluations,
// entries are per-sample correctness; returns sample-stddev(row means)/sqrt(n).
// Empty for fewer than two evaluations.
std::optional<double> pass1_sem(const std::vector<std::vector<int>>& correctness_matrix);

// Unbiased combinatorial Pass@k estimator for n samples with c correct.
double pass_at_k(int n, int c_correct, int k);

// One sampled completion reduced to its TTS-relevant fields.
struct Candidate {
  int answer_id = 0;
  double q = 0.0;
  int c = 0;
};

// Candidates for one prompt; on one prompt, equal answers must agree on
// correctness (a shared verifier).
struct PromptSamples {
  std::string prompt_id;
  std::vector<Candidate> candidates;
};

std::vector<std::string> validate_sample_set(std::span<const PromptSamples> sample_set);

enum class AggregationStrategy { majority, max_confidence, weighted_majority };
std::string to_string(AggregationStrategy s);

// Reduces one prompt's candidates to a single answer id. Ties break toward
// the lowest answer id, so runs are reproducible.
int aggregate(std::span<const Candidate> candidates, AggregationStrategy strategy);

}  // namespace bae
