#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "crowdsense/coverage/objective.hpp"
#include "crowdsense/grid/types.hpp"

namespace crowdsense {

/// Everything a planner needs: the candidate pool as it currently moves (speeds
/// already adjusted), the budget, the objective and any spatial constraints.
/// Built from a plain Instance for baselines and from a disturbed instance by
/// the refinement agents.
struct PlanningProblem {
  GridSpec grid;
  std::vector<Worker> workers;
  double budget = 0.0;
  ObjectiveConfig objective;
  BlockedSet blocked;
  std::map<WorkerId, std::vector<Cell>> required;

  static PlanningProblem from(const Instance& instance) {
    PlanningProblem p;
    p.grid = instance.grid;
    p.workers = instance.workers;
    p.budget = instance.budget;
    p.objective = ObjectiveConfig::for_grid(instance.grid, instance.alpha);
    return p;
  }

  const Worker* find(WorkerId id) const {
    for (const Worker& w : workers) {
      if (w.id == id) return &w;
    }
    return nullptr;
  }

  const std::vector<Cell>& required_for(WorkerId id) const {
    static const std::vector<Cell> none;
    auto it = required.find(id);
    return it == required.end() ? none : it->second;
  }

  bool hits_blocked(const Path& path) const {
    if (blocked.empty()) return false;
    for (const Step& s : path.steps) {
      if (blocked.blocks(s)) return true;
    }
    return false;
  }

  bool covers_required(WorkerId id, const Path& path) const {
    for (Cell c : required_for(id)) {
      if (!path.visits(c)) return false;
    }
    return true;
  }
};

/// Longest path (in steps) the worker can be paid for out of `budget_left`.
inline int affordable_steps(const Worker& w, double budget_left) {
  if (w.reward_per_step <= 0.0) return std::numeric_limits<int>::max();
  const double steps = std::floor(budget_left / w.reward_per_step + 1e-9);
  if (steps <= 0.0) return 0;
  return steps > 1e9 ? std::numeric_limits<int>::max() : static_cast<int>(steps);
}

/// Shortest path (in steps) from origin to destination at the worker's speed.
inline int minimum_steps(const Worker& w) { return w.transitions_for(manhattan(w.origin, w.destination)) + 1; }

}  // namespace crowdsense
