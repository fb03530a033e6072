#include "bae/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "bae/common.hpp"

namespace bae {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream in(s);
  while (std::getline(in, current, sep)) parts.push_back(trim(current));
  if (!s.empty() && s.back() == sep) parts.push_back("");
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a real number, got '" + text + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  std::int64_t value = 0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!config.values_.emplace(key, value).second)
      throw ConfigError("duplicate config key '" + key + "'");
  }
  return config;
}

std::string KeyValueConfig::raw(const std::string& key) const {
  consumed_.insert(key);
  return values_.at(key);
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  return values_.at(key);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  return parse_int(key, raw(key));
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  const std::string text = raw(key);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + text + "'");
  return value;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  return parse_double(key, raw(key));
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  const std::string text = raw(key);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + text + "'");
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key,
                                                    const std::vector<double>& fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const std::string& part : split(raw(key), ','))
    if (!part.empty()) out.push_back(parse_double(key, part));
  return out;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const std::string& part : split(raw(key), ','))
    if (!part.empty()) out.push_back(static_cast<int>(parse_int(key, part)));
  return out;
}

std::vector<std::string> KeyValueConfig::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  consumed_.insert(key);
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  for (const std::string& part : split(raw(key), ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

std::optional<std::vector<std::vector<double>>> KeyValueConfig::get_matrix(
    const std::string& key) const {
  consumed_.insert(key);
  if (!has(key)) return std::nullopt;
  std::vector<std::vector<double>> out;
  for (const std::string& row : split(raw(key), ';')) {
    if (row.empty()) continue;
    std::vector<double> values;
    for (const std::string& part : split(row, ','))
      if (!part.empty()) values.push_back(parse_double(key, part));
    out.push_back(std::move(values));
  }
  return out;
}

void KeyValueConfig::require_all_consumed() const {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : values_)
    if (consumed_.count(key) == 0) unknown.push_back(key);
  if (unknown.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const std::string& key : unknown) msg += " '" + key + "'";
  throw ConfigError(msg);
}

std::string KeyValueConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
  return out;
}

std::string config_hash(const std::string& command, const KeyValueConfig& config,
                        std::uint64_t seed) {
  const std::string text =
      "command=" + command + "\n" + config.canonical_text() + "seed=" + std::to_string(seed);
  std::uint64_t hash = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string hex(16, '0');
  for (int i = 15; i >= 0; --i) {
    hex[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return hex;
}

}  // namespace bae
