#include "bae/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bae {

namespace {

std::string loc(int rollout_1based, int k) {
  return "(rollout " + std::to_string(rollout_1based) + ", k=" + std::to_string(k) + ")";
}

}  // namespace

int SegmentedRollout::total_tokens() const {
  int n = 0;
  for (const Block& b : blocks) n += static_cast<int>(b.tokens.size());
  return n;
}

ValidationReport validate_group(const RolloutGroup& group) {
  ValidationReport report;
  auto add = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (group.rollouts.empty()) {
    add("empty group (G must be >= 1)");
    return report;
  }
  const int k_blocks = group.rollouts.front().num_blocks();

  for (std::size_t ri = 0; ri < group.rollouts.size(); ++ri) {
    const SegmentedRollout& r = group.rollouts[ri];
    const int rn = static_cast<int>(ri) + 1;

    if (r.prompt_id != group.prompt_id)
      add("prompt_id mismatch (rollout " + std::to_string(rn) + ")");
    if (r.num_blocks() != k_blocks)
      add("block count differs from rest of group (rollout " + std::to_string(rn) + ")");
    if (r.blocks.empty()) add("rollout has no blocks (rollout " + std::to_string(rn) + ")");

    for (std::size_t bi = 0; bi < r.blocks.size(); ++bi) {
      const Block& b = r.blocks[bi];
      const int expect_k = static_cast<int>(bi) + 1;
      if (b.index_k != expect_k)
        add("block index " + std::to_string(b.index_k) + " out of order, expected " +
            std::to_string(expect_k) + " " + loc(rn, b.index_k));
      if (b.tokens.empty()) add("empty block " + loc(rn, expect_k));
      for (const TokenRecord& t : b.tokens) {
        if (t.token_id < 0 || (group.vocab_size > 0 && t.token_id >= group.vocab_size))
          add("token_id " + std::to_string(t.token_id) + " outside vocabulary " +
              loc(rn, expect_k));
        if (!std::isfinite(t.logprob_old) || !std::isfinite(t.logprob_new))
          add("non-finite logprob " + loc(rn, expect_k));
        else if (t.logprob_old > 0.0 || t.logprob_new > 0.0)
          add("positive logprob " + loc(rn, expect_k));
      }
      if (!std::isfinite(b.reward)) add("non-finite reward " + loc(rn, expect_k));
      if (const auto* conf = std::get_if<ConfidencePayload>(&b.payload)) {
        if (!(conf->q >= 0.0 && conf->q <= 1.0))
          add("confidence out of [0,1] " + loc(rn, expect_k));
      }
    }

    for (int k = 2; k <= r.num_blocks(); ++k) {
      auto it = r.outcomes.find(k);
      if (it == r.outcomes.end()) {
        add("missing outcome " + loc(rn, k));
      } else if (!group.outcome_labels.empty() &&
                 std::find(group.outcome_labels.begin(), group.outcome_labels.end(),
                           it->second.value) == group.outcome_labels.end()) {
        add("outcome '" + it->second.value + "' not in declared label set " + loc(rn, k));
      }
    }
    for (const auto& [k, label] : r.outcomes) {
      if (k <= 1 || k > r.num_blocks())
        add("outcome for nonexistent block " + loc(rn, k));
    }
  }
  return report;
}

int block_token_count(const SegmentedRollout& rollout, int k) {
  if (k < 1 || k > rollout.num_blocks())
    throw std::out_of_range("block index " + std::to_string(k) + " out of range [1, " +
                            std::to_string(rollout.num_blocks()) + "]");
  return static_cast<int>(rollout.blocks[static_cast<std::size_t>(k - 1)].tokens.size());
}

nlohmann::json rollout_to_json(const SegmentedRollout& rollout) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const Block& b : rollout.blocks) {
    nlohmann::json jb;
    jb["k"] = b.index_k;
    nlohmann::json ids = nlohmann::json::array();
    nlohmann::json lpo = nlohmann::json::array();
    nlohmann::json lpn = nlohmann::json::array();
    for (const TokenRecord& t : b.tokens) {
      ids.push_back(t.token_id);
      lpo.push_back(t.logprob_old);
      lpn.push_back(t.logprob_new);
    }
    jb["token_ids"] = std::move(ids);
    jb["logprob_old"] = std::move(lpo);
    jb["logprob_new"] = std::move(lpn);
    jb["reward"] = b.reward;
    if (const auto* a = std::get_if<AnswerPayload>(&b.payload)) {
      jb["payload"] = nlohmann::json{{"answer", a->answer_id}};
    } else if (const auto* c = std::get_if<ConfidencePayload>(&b.payload)) {
      jb["payload"] = nlohmann::json{{"confidence", c->q}};
    }
    blocks.push_back(std::move(jb));
  }
  nlohmann::json outcomes = nlohmann::json::object();
  for (const auto& [k, label] : rollout.outcomes) outcomes[std::to_string(k)] = label.value;
  return nlohmann::json{
      {"prompt_id", rollout.prompt_id}, {"blocks", std::move(blocks)},
      {"outcomes", std::move(outcomes)}};
}

SegmentedRollout rollout_from_json(const nlohmann::json& j) {
  SegmentedRollout r;
  r.prompt_id = j.at("prompt_id").get<std::string>();
  for (const auto& jb : j.at("blocks")) {
    Block b;
    b.index_k = jb.at("k").get<int>();
    const auto& ids = jb.at("token_ids");
    const auto& lpo = jb.at("logprob_old");
    const auto& lpn = jb.at("logprob_new");
    for (std::size_t i = 0; i < ids.size(); ++i)
      b.tokens.push_back({ids[i].get<int>(), lpo[i].get<double>(), lpn[i].get<double>()});
    b.reward = jb.at("reward").get<double>();
    if (jb.contains("payload")) {
      const auto& p = jb["payload"];
      if (p.contains("answer"))
        b.payload = AnswerPayload{p["answer"].get<int>()};
      else if (p.contains("confidence"))
        b.payload = ConfidencePayload{p["confidence"].get<double>()};
    }
    r.blocks.push_back(std::move(b));
  }
  for (const auto& [key, value] : j.at("outcomes").items())
    r.outcomes[std::stoi(key)] = OutcomeLabel{value.get<std::string>()};
  return r;
}

std::string rollout_to_log_line(const SegmentedRollout& rollout) {
  return rollout_to_json(rollout).dump();
}

SegmentedRollout rollout_from_log_line(const std::string& line) {
  return rollout_from_json(nlohmann::json::parse(line));
}

}  // namespace bae
