#pragma once

#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "crowdsense/disturbances/apply.hpp"
#include "crowdsense/grid/validate.hpp"

namespace crowdsense {

struct HandlingEntry {
  DisturbanceType type{};
  bool satisfied = true;
  std::string detail;
  int issues = 0;  // offending steps, pairs or workers behind an unsatisfied entry
};

struct HandlingReport {
  std::vector<HandlingEntry> entries;
  bool all_satisfied = true;

  void add(HandlingEntry e) {
    all_satisfied = all_satisfied && e.satisfied;
    entries.push_back(std::move(e));
  }

  int unsatisfied() const {
    int n = 0;
    for (const auto& e : entries) n += e.satisfied ? 0 : 1;
    return n;
  }

  int issues() const {
    int n = 0;
    for (const auto& e : entries) n += e.issues;
    return n;
  }
};

/// Per-disturbance compliance of `solution` with the overlay.
inline HandlingReport check_handling(const Solution& solution, const DisturbedInstance& disturbed) {
  HandlingReport report;
  const Instance effective = disturbed.effective_instance();
  for (const DisturbanceInstruction& d : disturbed.active) {
    HandlingEntry e{d.type, true, {}};
    std::vector<std::string> problems;
    switch (d.type) {
      case DisturbanceType::BudgetChange: {
        const double cost = solution_cost(solution, effective);
        if (cost > disturbed.effective_budget + 1e-9) {
          problems.push_back(fmt::format("cost {:g} exceeds budget {:g}", cost, disturbed.effective_budget));
        } else {
          e.detail = fmt::format("cost {:g} within budget {:g}", cost, disturbed.effective_budget);
        }
        break;
      }
      case DisturbanceType::AreaBlocked: {
        BlockedSet mine;
        for (const BlockedArea& a : d.areas) mine.insert(a);
        for (const auto& [id, path] : solution.assignments) {
          for (const Step& s : path.steps) {
            if (mine.blocks(s)) {
              problems.push_back(fmt::format("worker {} enters ({}, {}) at slot {}", to_string(id), s.x, s.y, s.t));
            }
          }
        }
        if (problems.empty()) e.detail = "no step enters a blocked cell";
        break;
      }
      case DisturbanceType::PriorityArea: {
        const long now = priority_visits(solution, disturbed.priority_cells);
        if (!disturbed.baseline_priority_count) {
          e.detail = fmt::format("{} priority visits (no baseline stored)", now);
        } else if (now < *disturbed.baseline_priority_count) {
          problems.push_back(fmt::format("{} priority visits, baseline had {}", now, *disturbed.baseline_priority_count));
        } else {
          e.detail = fmt::format("{} priority visits >= baseline {}", now, *disturbed.baseline_priority_count);
        }
        break;
      }
      case DisturbanceType::MidPathVisit:
        for (const RequiredVisit& v : d.visits) {
          auto it = solution.assignments.find(v.worker);
          if (it == solution.assignments.end()) {
            problems.push_back(fmt::format("(worker {}, cell ({}, {})): worker not assigned", to_string(v.worker),
                                           v.cell.x, v.cell.y));
          } else if (!it->second.visits(v.cell)) {
            problems.push_back(
                fmt::format("(worker {}, cell ({}, {})): cell not visited", to_string(v.worker), v.cell.x, v.cell.y));
          }
        }
        if (problems.empty()) e.detail = "all required visits present";
        break;
      case DisturbanceType::WorkerUnavailable:
        for (WorkerId id : d.workers) {
          if (solution.contains(id)) problems.push_back("unavailable worker " + to_string(id) + " still assigned");
        }
        if (problems.empty()) e.detail = "no unavailable worker assigned";
        break;
      case DisturbanceType::BadWeather:
        for (const auto& [id, path] : solution.assignments) {
          const Worker* w = effective.find(id);
          if (w == nullptr) continue;
          for (const Violation& v : validate_path(path, *w, effective.grid).violations) {
            if (v.kind == ViolationKind::SpeedLimit) problems.push_back("worker " + to_string(id) + ": " + v.detail);
          }
        }
        if (problems.empty()) e.detail = fmt::format("all paths respect speed factor {:g}", disturbed.speed_factor);
        break;
      case DisturbanceType::NewWorkerAvailable:
        e.detail = "informational";
        break;
      case DisturbanceType::ContinueOptimize:
        e.detail = "no constraint";
        break;
    }
    if (!problems.empty()) {
      e.satisfied = false;
      e.issues = static_cast<int>(problems.size());
      e.detail = fmt::format("{}", fmt::join(problems, "; "));
    }
    report.add(std::move(e));
  }
  return report;
}

}  // namespace crowdsense
