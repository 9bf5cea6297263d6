#pragma once

#include <bsattack/attack/attack.hpp>
#include <bsattack/errors.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bsattack {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError(where + "expected a number, got '" + s + "'");
  }
  return v;
}

inline unsigned long long parse_unsigned(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size()) {
    throw FormatError(where + "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Comma-separated list of reals, e.g. "10,8,5,2".
inline std::vector<double> parse_number_list(const std::string& text, const std::string& where = "") {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    out.push_back(detail::parse_double(detail::trim(item), where));
  }
  if (out.empty()) throw FormatError(where + "empty list");
  return out;
}

/// Applies `key = value` lines onto `cfg`. Recognized keys: alpha_schedule,
/// lr_schedule, max_iterations, similarity_threshold, seed. '#' starts a
/// comment.
inline void apply_attack_config(std::istream& in, AttackConfig& cfg, const std::string& source = "config") {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "alpha_schedule") {
      cfg.alpha_schedule = parse_number_list(value, where);
    } else if (key == "lr_schedule") {
      cfg.lr_schedule = parse_number_list(value, where);
    } else if (key == "max_iterations") {
      cfg.max_iterations = detail::parse_unsigned(value, where);
    } else if (key == "similarity_threshold") {
      cfg.similarity_threshold = detail::parse_double(value, where);
    } else if (key == "seed") {
      cfg.seed = detail::parse_unsigned(value, where);
    } else {
      throw FormatError(where + "unknown key '" + key + "'");
    }
  }
}

inline AttackConfig load_attack_config(const std::string& path, AttackConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path);
  apply_attack_config(in, cfg, path);
  return cfg;
}

}  // namespace bsattack
