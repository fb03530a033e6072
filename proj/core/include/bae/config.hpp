#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bae {

// Flat `key = value` run configuration. Lines starting with '#' and blank
// lines are skipped; keys are dotted (env.task, trainer.steps, ...).
// Every key must be consumed by a typed getter; leftovers are reported as
// unknown keys, so typos fail fast.
class KeyValueConfig {
 public:
  static KeyValueConfig from_file(const std::string& path);
  static KeyValueConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) const;
  // Semicolon-separated rows of comma-separated reals.
  std::optional<std::vector<std::vector<double>>> get_matrix(const std::string& key) const;

  // Throws ConfigError naming every key no getter consumed.
  void require_all_consumed() const;

  // Canonical `key=value` lines of the raw config, sorted by key.
  std::string canonical_text() const;

 private:
  std::string raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

// 16-hex-digit digest of (command, canonical config text, master seed);
// stamped into every output file.
std::string config_hash(const std::string& command, const KeyValueConfig& config,
                        std::uint64_t seed);

}  // namespace bae
