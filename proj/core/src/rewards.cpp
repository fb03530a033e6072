#include "bae/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "bae/common.hpp"

namespace bae {

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::rlvr: return "rlvr";
    case RewardKind::brier: return "brier";
    case RewardKind::bce: return "bce";
    case RewardKind::rlcr: return "rlcr";
    case RewardKind::two_attempt: return "two_attempt";
  }
  return "?";
}

RewardKind reward_kind_from_string(const std::string& name) {
  if (name == "rlvr") return RewardKind::rlvr;
  if (name == "brier") return RewardKind::brier;
  if (name == "bce") return RewardKind::bce;
  if (name == "rlcr") return RewardKind::rlcr;
  if (name == "two_attempt") return RewardKind::two_attempt;
  throw ConfigError("unknown reward kind '" + name + "'");
}

double correctness_reward(int c) { return static_cast<double>(c); }

double brier_reward(double q, int c) {
  const double d = q - static_cast<double>(c);
  return -(d * d);
}

double bce_reward(double q, int c, double eps) {
  const double qc = std::clamp(q, eps, 1.0 - eps);
  return c == 1 ? std::log(qc) : std::log(1.0 - qc);
}

double rlcr_reward(double q, int c) { return correctness_reward(c) + brier_reward(q, c); }

std::pair<double, double> two_attempt_rewards(int c1, int c2, int answer1, int answer2) {
  const double r1 = static_cast<double>(c1);
  double r2 = 0.0;
  if (c2 == 1)
    r2 = 1.0;
  else if (answer2 != answer1)
    r2 = 0.1;
  return {r1, r2};
}

}  // namespace bae
