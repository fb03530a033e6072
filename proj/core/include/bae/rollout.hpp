#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace bae {

// One generated token with its behavior-policy and current-policy
// log-probabilities (nats). Both are <= 0 and finite for valid data.
struct TokenRecord {
  int token_id = 0;
  double logprob_old = 0.0;
  double logprob_new = 0.0;

  bool operator==(const TokenRecord&) const = default;
};

struct AnswerPayload {
  int answer_id = 0;
  bool operator==(const AnswerPayload&) const = default;
};

struct ConfidencePayload {
  double q = 0.0;  // in [0, 1]
  bool operator==(const ConfidencePayload&) const = default;
};

// Parsed value of a block: an answer for solution-type blocks, a confidence
// for confidence blocks, absent otherwise.
using BlockPayload = std::variant<std::monostate, AnswerPayload, ConfidencePayload>;

// Contiguous token span with one objective-specific reward.
struct Block {
  int index_k = 1;  // 1-based
  std::vector<TokenRecord> tokens;
  double reward = 0.0;
  BlockPayload payload;

  bool operator==(const Block&) const = default;
};

// Discrete label summarizing the prefix before a block (e.g. whether the
// preceding solution was correct). Values come from a finite set declared
// per task on the enclosing group.
struct OutcomeLabel {
  std::string value;
  auto operator<=>(const OutcomeLabel&) const = default;
};

namespace outcome {
inline const std::string kCorrect = "correct";
inline const std::string kIncorrect = "incorrect";
}  // namespace outcome

// One completion, segmented into K blocks. Blocks partition the completion;
// outcomes[k] is defined for every k > 1. Treated as immutable once built.
struct SegmentedRollout {
  std::string prompt_id;
  std::vector<Block> blocks;
  std::map<int, OutcomeLabel> outcomes;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int total_tokens() const;

  bool operator==(const SegmentedRollout&) const = default;
};

// G rollouts sharing one prompt, plus the generation context needed to
// validate them (vocabulary size, declared outcome label set).
struct RolloutGroup {
  std::string prompt_id;
  std::vector<SegmentedRollout> rollouts;
  std::vector<std::string> outcome_labels;
  int vocab_size = 0;

  int size() const { return static_cast<int>(rollouts.size()); }
  int num_blocks() const { return rollouts.empty() ? 0 : rollouts.front().num_blocks(); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every data-model invariant for every rollout in the group.
// Violations are reported with their (rollout, block) location; they are
// data, not failures.
ValidationReport validate_group(const RolloutGroup& group);

// Number of tokens in block k (1-based). Throws std::out_of_range for bad k.
int block_token_count(const SegmentedRollout& rollout, int k);

// Line-delimited log records. Field names are a stable contract:
// prompt_id, blocks[{k, token_ids, logprob_old, logprob_new, reward,
// payload}], outcomes{}.
nlohmann::json rollout_to_json(const SegmentedRollout& rollout);
SegmentedRollout rollout_from_json(const nlohmann::json& j);
std::string rollout_to_log_line(const SegmentedRollout& rollout);
SegmentedRollout rollout_from_log_line(const std::string& line);

}  // namespace bae
