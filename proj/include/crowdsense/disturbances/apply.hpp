#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crowdsense/disturbances/instruction.hpp"
#include "crowdsense/planners/problem.hpp"

namespace crowdsense {

/// Immutable overlay of active disturbances on a base instance.
struct DisturbedInstance {
  Instance base;
  std::vector<DisturbanceInstruction> active;
  double effective_budget = 0.0;
  BlockedSet blocked;
  std::vector<Cell> priority_cells;
  double priority_weight = 0.0;
  std::vector<RequiredVisit> required_visits;
  std::set<WorkerId> removed;
  std::vector<Worker> added;
  double speed_factor = 1.0;
  std::vector<std::string> notes;
  std::optional<long> baseline_priority_count;  // visits to priority cells in the stored baseline

  static DisturbedInstance undisturbed(const Instance& instance) {
    DisturbedInstance d;
    d.base = instance;
    d.effective_budget = instance.budget;
    return d;
  }

  /// Candidate pool after removals and additions, with speeds scaled by the weather factor.
  std::vector<Worker> pool() const {
    std::vector<Worker> out;
    for (const Worker& w : base.workers) {
      if (!removed.count(w.id)) out.push_back(w);
    }
    for (const Worker& w : added) {
      if (!removed.count(w.id)) out.push_back(w);
    }
    for (Worker& w : out) w.speed *= speed_factor;
    return out;
  }

  /// Instance view used for validation: effective pool and budget. Not re-validated,
  /// since slowed workers may no longer reach their destinations.
  Instance effective_instance() const {
    Instance inst;
    inst.grid = base.grid;
    inst.workers = pool();
    inst.budget = effective_budget;
    inst.alpha = base.alpha;
    return inst;
  }

  PlanningProblem problem() const {
    PlanningProblem p;
    p.grid = base.grid;
    p.workers = pool();
    p.budget = effective_budget;
    p.objective = ObjectiveConfig::for_grid(base.grid, base.alpha);
    p.blocked = blocked;
    for (const RequiredVisit& v : required_visits) p.required[v.worker].push_back(v.cell);
    return p;
  }

  bool has(DisturbanceType t) const {
    return std::any_of(active.begin(), active.end(), [t](const DisturbanceInstruction& d) { return d.type == t; });
  }

  /// Overlay fields compared, ignoring the order instructions arrived in.
  bool same_effect(const DisturbedInstance& o) const {
    auto sorted = [](auto v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    auto worker_ids = [](const std::vector<Worker>& ws) {
      std::vector<std::uint32_t> ids;
      for (const Worker& w : ws) ids.push_back(to_underlying(w.id));
      std::sort(ids.begin(), ids.end());
      return ids;
    };
    return base == o.base && effective_budget == o.effective_budget && blocked == o.blocked &&
           sorted(priority_cells) == sorted(o.priority_cells) && priority_weight == o.priority_weight &&
           sorted(required_visits) == sorted(o.required_visits) && removed == o.removed &&
           worker_ids(added) == worker_ids(o.added) && speed_factor == o.speed_factor;
  }
};

/// Adds one instruction to an existing overlay.
inline DisturbedInstance apply_disturbance(DisturbedInstance d, const DisturbanceInstruction& instr) {
  instr.validate(d.base.grid);
  auto known = [&](WorkerId id) {
    if (d.base.find(id) != nullptr) return true;
    return std::any_of(d.added.begin(), d.added.end(), [id](const Worker& w) { return w.id == id; });
  };
  switch (instr.type) {
    case DisturbanceType::BudgetChange:
      d.effective_budget = std::max(0.0, d.effective_budget + instr.amount);
      break;
    case DisturbanceType::AreaBlocked:
      for (const BlockedArea& a : instr.areas) {
        d.blocked.insert(a);
        for (const Worker& w : d.base.workers) {
          if (w.origin == a.cell || w.destination == a.cell) {
            d.notes.push_back(fmt::format("blocked cell ({}, {}) is an endpoint of worker {}", a.cell.x, a.cell.y,
                                          to_string(w.id)));
          }
        }
      }
      break;
    case DisturbanceType::PriorityArea:
      for (Cell c : instr.cells) {
        if (std::find(d.priority_cells.begin(), d.priority_cells.end(), c) == d.priority_cells.end()) {
          d.priority_cells.push_back(c);
        }
      }
      d.priority_weight = std::max(d.priority_weight, instr.weight);
      break;
    case DisturbanceType::MidPathVisit:
      for (const RequiredVisit& v : instr.visits) {
        if (!known(v.worker)) throw DomainError("mid-path visit for unknown worker " + to_string(v.worker));
        d.required_visits.push_back(v);
      }
      break;
    case DisturbanceType::WorkerUnavailable:
      for (WorkerId id : instr.workers) {
        if (!known(id)) throw DomainError("cannot remove unknown worker " + to_string(id));
        d.removed.insert(id);
      }
      break;
    case DisturbanceType::NewWorkerAvailable:
      for (const Worker& w : instr.new_workers) {
        if (known(w.id)) throw DomainError("new worker id " + to_string(w.id) + " already in the pool");
        d.added.push_back(w);
      }
      break;
    case DisturbanceType::BadWeather:
      d.speed_factor *= instr.amount;
      break;
    case DisturbanceType::ContinueOptimize:
      break;
  }
  d.active.push_back(instr);
  return d;
}

inline DisturbedInstance apply_disturbance(const Instance& instance, const DisturbanceInstruction& instr) {
  return apply_disturbance(DisturbedInstance::undisturbed(instance), instr);
}

inline long priority_visits(const Solution& s, const std::vector<Cell>& cells) {
  long n = 0;
  for (const auto& [id, path] : s.assignments) {
    for (const Step& st : path.steps) {
      if (std::find(cells.begin(), cells.end(), st.cell()) != cells.end()) ++n;
    }
  }
  return n;
}

}  // namespace crowdsense
