#pragma once

#include "crowdsense/coverage/io.hpp"
#include "crowdsense/grid/io.hpp"
#include "crowdsense/planners/route_plan.hpp"

namespace crowdsense {

inline json to_json(const PlanResult& r) {
  return {{"algorithm", to_string(r.algorithm)},
          {"solution", to_json(r.solution)},
          {"objective", to_json(r.objective)},
          {"cost", r.cost},
          {"planner_log", r.planner_log}};
}

/// Reads a stored plan. Objective and cost are recomputed against `instance`
/// rather than trusted from the file.
inline PlanResult plan_result_from_json(const json& j, const Instance& instance) {
  if (!j.is_object()) throw FormatError("plan must be an object");
  const Solution solution = solution_from_json(j.contains("solution") ? j["solution"] : j);
  const Algorithm algo = j.contains("algorithm") ? algorithm_from_string(j["algorithm"].get<std::string>())
                                                 : Algorithm::GraphDP;
  std::vector<std::string> log;
  if (j.contains("planner_log") && j["planner_log"].is_array()) {
    for (const json& line : j["planner_log"]) {
      if (line.is_string()) log.push_back(line.get<std::string>());
    }
  }
  PlanResult r = finish_plan(PlanningProblem::from(instance), algo, solution, {});
  if (!log.empty()) r.planner_log = std::move(log);
  return r;
}

}  // namespace crowdsense
