#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdsense/coverage/state.hpp"
#include "crowdsense/grid/realize.hpp"
#include "crowdsense/grid/validate.hpp"
#include "crowdsense/planners/config.hpp"
#include "crowdsense/planners/problem.hpp"

namespace crowdsense {

/// Waypoint-level view of a solution used by the insertion and annealing
/// planners: each recruited worker has an ordered waypoint list, realised over
/// its whole window.
struct RoutePlan {
  std::map<WorkerId, std::vector<Cell>> waypoints;
  std::map<WorkerId, Path> paths;
  double cost = 0.0;

  bool recruited(WorkerId id) const { return paths.count(id) != 0; }

  Solution solution() const {
    Solution s;
    s.assignments = paths;
    return s;
  }
};

inline double full_window_cost(const Worker& w) { return (w.window_length() + 1) * w.reward_per_step; }

/// Realises a waypoint list over the full window; nullopt if it does not fit or
/// would enter a blocked step.
inline std::optional<Path> realize_allowed(const PlanningProblem& problem, const Worker& w,
                                           const std::vector<Cell>& waypoints) {
  auto realized = realize_path(w, waypoints, problem.grid);
  if (!realized || problem.hits_blocked(*realized.path)) return std::nullopt;
  return std::move(*realized.path);
}

/// Total cell changes needed to visit origin -> waypoints -> destination.
inline int route_moves(const Worker& w, const std::vector<Cell>& waypoints) {
  int moves = 0;
  Cell cursor = w.origin;
  for (Cell c : waypoints) {
    moves += manhattan(cursor, c);
    cursor = c;
  }
  return moves + manhattan(cursor, w.destination);
}

/// Cheap necessary condition for inserting `c` at `pos`: the detour still fits the window.
inline bool insertion_fits(const Worker& w, const std::vector<Cell>& waypoints, int current_moves, Cell c,
                           std::size_t pos) {
  const Cell prev = pos == 0 ? w.origin : waypoints[pos - 1];
  const Cell next = pos == waypoints.size() ? w.destination : waypoints[pos];
  const int detour = manhattan(prev, c) + manhattan(c, next) - manhattan(prev, next);
  return w.transitions_for(current_moves + detour) <= w.window_length();
}

inline PlanResult finish_plan(const PlanningProblem& problem, Algorithm algorithm, Solution solution,
                              std::vector<std::string> log) {
  PlanResult r;
  r.algorithm = algorithm;
  r.solution = std::move(solution);
  CoverageState state(problem.grid, problem.objective);
  for (const auto& [id, path] : r.solution.assignments) {
    state.add(path);
    if (const Worker* w = problem.find(id)) r.cost += path_cost(path, *w);
  }
  r.objective = state.value();
  if (r.solution.empty()) log.push_back("no worker fits the budget; returning the empty schedule");
  log.push_back(fmt::format("final: {} workers, cost {:g}, J {:.6f}", r.solution.size(), r.cost, r.objective.objective));
  r.planner_log = std::move(log);
  return r;
}

}  // namespace crowdsense
