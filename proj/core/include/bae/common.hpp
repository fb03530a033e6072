#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bae {

inline constexpr std::string_view kVersion = "0.1.0";

// Bad configuration or violated precondition detected before any work starts.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A caller broke an inter-module contract (shape mismatch, missing entry).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Non-finite numerics encountered mid-run; carries the step index.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace bae
