#pragma once

#include <string>
#include <utility>

namespace bae {

// (reported confidence, verifier correctness) pair; the unit every
// calibration metric and confidence reward operates on.
struct CalibrationRecord {
  double q = 0.0;  // in [0, 1]
  int c = 0;       // 0 or 1

  bool operator==(const CalibrationRecord&) const = default;
};

enum class RewardKind { rlvr, brier, bce, rlcr, two_attempt };

std::string to_string(RewardKind kind);
RewardKind reward_kind_from_string(const std::string& name);

inline constexpr double kDefaultBceEps = 1e-4;

// Binary verifier reward: returns c.
double correctness_reward(int c);

// Negated squared error -(q-c)^2, in [-1, 0].
double brier_reward(double q, int c);

// Bernoulli log-likelihood c*ln(q') + (1-c)*ln(1-q') with q' = clamp(q, eps,
// 1-eps); <= 0 and >= ln(eps).
double bce_reward(double q, int c, double eps = kDefaultBceEps);

// Correctness plus Brier calibration term: c - (q-c)^2.
double rlcr_reward(double q, int c);

// Shaped rewards for a two-attempt refinement pair. Full credit for a
// correct second attempt; a wrong second attempt earns 0.1 when it differs
// from the first answer and 0 when it repeats it.
std::pair<double, double> two_attempt_rewards(int c1, int c2, int answer1, int answer2);

}  // namespace bae
