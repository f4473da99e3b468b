#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/refinement.hpp"
#include "crowdsense/util/json.hpp"

namespace crowdsense {

/// What the table needs from one trial; built from a trace, or read back from trace JSON.
struct TrialOutcome {
  bool success = false;
  int iterations_used = 0;
  double j_base = 0.0;
  double j_final = 0.0;
  double cost_base = 0.0;
  double cost_final = 0.0;
  long tokens = 0;
};

struct MetricsRow {
  std::string config;   // e.g. tdrive-Small
  std::string setting;  // planner/disturbance, e.g. TVPG/continue_optimize
  int trials = 0;
  int successes = 0;
  double sr = 0.0;   // percent
  double air = 0.0;  // percent, mean over every trial with a usable baseline
  double air_std = 0.0;
  double ani = std::numeric_limits<double>::quiet_NaN();  // mean over successes; NaN when none
  double acs = 0.0;
  double acs_std = 0.0;
  double base_objective = 0.0;   // mean J of the baselines
  double final_objective = 0.0;  // mean J of the final solutions
  double tokens = 0.0;           // mean per trial
  int air_trials = 0;            // trials whose baseline J was finite and nonzero
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
};

inline constexpr double kAirDenominatorFloor = 1e-12;

/// Relative change in percent; nullopt when the baseline is the empty sentinel or ~0.
inline std::optional<double> improvement_rate(double j_base, double j_final) {
  if (!std::isfinite(j_base) || !std::isfinite(j_final) || std::abs(j_base) < kAirDenominatorFloor) return std::nullopt;
  return (j_final - j_base) / std::abs(j_base) * 100.0;
}

inline TrialOutcome trial_outcome(const RefinementTrace& trace, const PlanResult& baseline) {
  if (trace.baseline != baseline.solution) throw DomainError("trace and baseline describe different solutions");
  return {trace.success,
          trace.iterations_used,
          trace.baseline_metrics.objective_value,
          trace.final_metrics.objective_value,
          baseline.cost,
          trace.final_metrics.cost,
          trace.tokens.total()};
}

namespace detail {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values.
inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// SR = successes / trials * 100; AIR averages every trial (failures included,
/// at their final iterate); ANI averages iterations_used over successes; ACS is
/// cost_base - cost_final, so a cost increase is negative.
inline MetricsRow compute_metrics(const std::vector<TrialOutcome>& trials, std::string config = {},
                                  std::string setting = {}) {
  MetricsRow row;
  row.config = std::move(config);
  row.setting = std::move(setting);
  row.trials = static_cast<int>(trials.size());
  std::vector<double> air, ani, acs, jb, jf, tokens;
  for (const TrialOutcome& t : trials) {
    if (t.success) {
      ++row.successes;
      ani.push_back(t.iterations_used);
    }
    if (auto r = improvement_rate(t.j_base, t.j_final)) air.push_back(*r);
    acs.push_back(t.cost_base - t.cost_final);
    if (std::isfinite(t.j_base)) jb.push_back(t.j_base);
    if (std::isfinite(t.j_final)) jf.push_back(t.j_final);
    tokens.push_back(static_cast<double>(t.tokens));
  }
  if (row.trials > 0) row.sr = 100.0 * row.successes / row.trials;
  row.air = detail::mean(air);
  row.air_std = detail::stddev(air);
  row.air_trials = static_cast<int>(air.size());
  if (!ani.empty()) row.ani = detail::mean(ani);
  row.acs = detail::mean(acs);
  row.acs_std = detail::stddev(acs);
  row.base_objective = detail::mean(jb);
  row.final_objective = detail::mean(jf);
  row.tokens = detail::mean(tokens);
  return row;
}

/// Traces and baselines must be aligned by trial.
inline MetricsRow compute_metrics(const std::vector<RefinementTrace>& traces, const std::vector<PlanResult>& baselines,
                                  std::string config = {}, std::string setting = {}) {
  if (traces.size() != baselines.size()) {
    throw DomainError(fmt::format("{} traces but {} baselines", traces.size(), baselines.size()));
  }
  std::vector<TrialOutcome> trials;
  for (std::size_t i = 0; i < traces.size(); ++i) trials.push_back(trial_outcome(traces[i], baselines[i]));
  return compute_metrics(trials, std::move(config), std::move(setting));
}

inline json to_json(const TrialOutcome& t) {
  return {{"success", t.success},           {"iterations_used", t.iterations_used}, {"j_base", finite_or_tag(t.j_base)},
          {"j_final", finite_or_tag(t.j_final)}, {"cost_base", t.cost_base},   {"cost_final", t.cost_final},
          {"tokens", t.tokens}};
}

inline TrialOutcome trial_outcome_from_json(const json& j) {
  try {
    return {j.at("success").get<bool>(),      j.at("iterations_used").get<int>(), number_or_tag(j.at("j_base")),
            number_or_tag(j.at("j_final")),   j.at("cost_base").get<double>(),    j.at("cost_final").get<double>(),
            j.value("tokens", 0L)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("trial outcome: ") + e.what());
  }
}

inline json to_json(const MetricsRow& r) {
  return {{"config", r.config},
          {"setting", r.setting},
          {"trials", r.trials},
          {"successes", r.successes},
          {"sr", r.sr},
          {"air", r.air},
          {"air_std", r.air_std},
          {"air_trials", r.air_trials},
          {"ani", finite_or_tag(r.ani)},
          {"acs", r.acs},
          {"acs_std", r.acs_std},
          {"base_objective", r.base_objective},
          {"final_objective", r.final_objective},
          {"tokens", r.tokens}};
}

inline MetricsRow metrics_row_from_json(const json& j) {
  try {
    MetricsRow r;
    r.config = j.at("config").get<std::string>();
    r.setting = j.at("setting").get<std::string>();
    r.trials = j.at("trials").get<int>();
    r.successes = j.at("successes").get<int>();
    r.sr = j.at("sr").get<double>();
    r.air = j.at("air").get<double>();
    r.air_std = j.value("air_std", 0.0);
    r.air_trials = j.value("air_trials", r.trials);
    r.ani = number_or_tag(j.at("ani"));
    r.acs = j.at("acs").get<double>();
    r.acs_std = j.value("acs_std", 0.0);
    r.base_objective = j.value("base_objective", 0.0);
    r.final_objective = j.value("final_objective", 0.0);
    r.tokens = j.value("tokens", 0.0);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics row: ") + e.what());
  }
}

inline json to_json(const MetricsTable& t) {
  json rows = json::array();
  for (const MetricsRow& r : t.rows) rows.push_back(to_json(r));
  return {{"rows", rows}};
}

inline MetricsTable metrics_table_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array()) throw FormatError("metrics table needs rows");
  MetricsTable t;
  for (const json& r : j["rows"]) t.rows.push_back(metrics_row_from_json(r));
  return t;
}

/// Fixed precision so reruns are byte-identical.
inline std::string to_csv(const MetricsTable& t) {
  std::string out =
      "config,setting,trials,successes,sr,air,air_std,ani,acs,acs_std,base_objective,final_objective,tokens\n";
  for (const MetricsRow& r : t.rows) {
    out += fmt::format("{},{},{},{},{:.3f},{:.3f},{:.3f},{},{:.3f},{:.3f},{:.6f},{:.6f},{:.1f}\n", r.config, r.setting,
                       r.trials, r.successes, r.sr, r.air, r.air_std,
                       std::isfinite(r.ani) ? fmt::format("{:.3f}", r.ani) : std::string("nan"), r.acs, r.acs_std,
                       r.base_objective, r.final_objective, r.tokens);
  }
  return out;
}

}  // namespace crowdsense
