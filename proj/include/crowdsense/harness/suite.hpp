#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/disturbances/instruction.hpp"
#include "crowdsense/gateway/chat.hpp"
#include "crowdsense/harness/scale.hpp"
#include "crowdsense/planners/config.hpp"

namespace crowdsense {

struct SuiteConfig {
  std::vector<Dataset> datasets{Dataset::TDrive};
  std::vector<ScaleName> scales{ScaleName::Small};
  std::vector<Algorithm> planners{Algorithm::TVPG};
  std::vector<DisturbanceType> disturbances{DisturbanceType::ContinueOptimize};
  int trials = 20;
  std::uint64_t seed = 0;
  int max_iterations = 10;
  int threads = 0;  // 0: hardware concurrency
  std::string policy = "deterministic";  // deterministic, llm, or mock
  std::string mock_script;               // JSON script for policy = mock
  GatewayConfig gateway;
  bool reset_memory = false;  // fresh memory per trial instead of per cell
  bool write_traces = true;
  bool write_heatmaps = true;
  std::string output_dir = "results";

  void validate() const {
    if (datasets.empty() || scales.empty() || planners.empty() || disturbances.empty()) {
      throw DomainError("suite needs at least one dataset, scale, planner and disturbance");
    }
    if (trials < 1) throw DomainError("suite trials must be >= 1");
    if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
    if (policy != "deterministic" && policy != "llm" && policy != "mock") {
      throw DomainError("policy must be deterministic, llm or mock");
    }
    if (policy == "mock" && mock_script.empty()) throw DomainError("policy = mock needs mock_script");
    gateway.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::string unquote(std::string s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

/// `[a, "b", c]` or `a, b, c`.
inline std::vector<std::string> list_value(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw FormatError("unterminated list: " + s);
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = unquote(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool bool_value(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError(key + ": expected true or false, got '" + v + "'");
}

inline long long int_value(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw FormatError(key + ": expected an integer, got '" + v + "'");
  }
}

inline double real_value(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double n = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw FormatError(key + ": expected a number, got '" + v + "'");
  }
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment and `[gateway]` prefixes the
/// keys below it with "gateway.". Unknown keys are errors.
inline SuiteConfig parse_suite(const std::string& text) {
  SuiteConfig c;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(fmt::format("suite line {}: expected key = value", lineno));
    std::string key = detail::trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    const std::string raw = detail::trim(line.substr(eq + 1));
    const std::string v = detail::unquote(raw);
    try {
      if (key == "datasets") {
        c.datasets.clear();
        for (const auto& s : detail::list_value(raw)) c.datasets.push_back(dataset_from_string(s));
      } else if (key == "scales") {
        c.scales.clear();
        for (const auto& s : detail::list_value(raw)) c.scales.push_back(scale_name_from_string(s));
      } else if (key == "planners") {
        c.planners.clear();
        for (const auto& s : detail::list_value(raw)) c.planners.push_back(algorithm_from_string(s));
      } else if (key == "disturbances") {
        c.disturbances.clear();
        for (const auto& s : detail::list_value(raw)) c.disturbances.push_back(disturbance_type_from_string(s));
      } else if (key == "trials") c.trials = static_cast<int>(detail::int_value(key, v));
      else if (key == "seed") c.seed = static_cast<std::uint64_t>(detail::int_value(key, v));
      else if (key == "max_iterations") c.max_iterations = static_cast<int>(detail::int_value(key, v));
      else if (key == "threads") c.threads = static_cast<int>(detail::int_value(key, v));
      else if (key == "policy") c.policy = v;
      else if (key == "mock_script") c.mock_script = v;
      else if (key == "reset_memory") c.reset_memory = detail::bool_value(key, v);
      else if (key == "write_traces") c.write_traces = detail::bool_value(key, v);
      else if (key == "write_heatmaps") c.write_heatmaps = detail::bool_value(key, v);
      else if (key == "output_dir") c.output_dir = v;
      else if (key == "gateway.endpoint") c.gateway.endpoint = v;
      else if (key == "gateway.model") c.gateway.model = v;
      else if (key == "gateway.api_key_env") c.gateway.api_key_env = v;
      else if (key == "gateway.timeout_seconds") c.gateway.timeout_seconds = detail::real_value(key, v);
      else if (key == "gateway.max_retries") c.gateway.max_retries = static_cast<int>(detail::int_value(key, v));
      else if (key == "gateway.temperature") c.gateway.temperature = detail::real_value(key, v);
      else if (key == "gateway.max_tokens") c.gateway.max_tokens = static_cast<int>(detail::int_value(key, v));
      else if (key == "gateway.requests_per_second") c.gateway.requests_per_second = detail::real_value(key, v);
      else if (key == "gateway.count_tokens") c.gateway.count_tokens = detail::bool_value(key, v);
      else if (key == "gateway.max_path_listing") {
        c.gateway.max_path_listing = static_cast<std::size_t>(detail::int_value(key, v));
      } else throw FormatError("unknown key '" + key + "'");
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("suite line {}: {}", lineno, e.what()));
    }
  }
  c.validate();
  return c;
}

}  // namespace crowdsense
