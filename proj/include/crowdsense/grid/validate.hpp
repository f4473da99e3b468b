#pragma once

#include <fmt/format.h>

#include "crowdsense/grid/types.hpp"

namespace crowdsense {

inline double path_cost(const Path& path, const Worker& worker) {
  if (path.empty()) throw DomainError("path_cost of an empty path for worker " + to_string(worker.id));
  return static_cast<double>(path.size()) * worker.reward_per_step;
}

/// Sum of path costs over workers known to `instance`; unknown ids contribute nothing.
inline double solution_cost(const Solution& solution, const Instance& instance) {
  double total = 0.0;
  for (const auto& [id, path] : solution.assignments) {
    const Worker* w = instance.find(id);
    if (w != nullptr && !path.empty()) total += path_cost(path, *w);
  }
  return total;
}

/// Checks every constraint a trajectory must satisfy and reports all violations.
inline ValidationResult validate_path(const Path& path, const Worker& worker, const GridSpec& grid,
                                      const BlockedSet& blocked = {}) {
  ValidationResult result;
  auto report = [&](ViolationKind kind, std::string detail, std::optional<Step> step = std::nullopt) {
    result.add({worker.id, kind, std::move(detail), step});
  };

  if (path.empty()) {
    report(ViolationKind::EmptyPath, "path has no steps");
    return result;
  }

  const Step& first = path.front();
  if (first.cell() != worker.origin || first.t != worker.t_start) {
    report(ViolationKind::OriginMismatch,
           fmt::format("starts at ({}, {})@{} but origin is ({}, {})@{}", first.x, first.y, first.t,
                       worker.origin.x, worker.origin.y, worker.t_start),
           first);
  }
  const Step& last = path.back();
  if (last.cell() != worker.destination) {
    report(ViolationKind::DestinationMismatch,
           fmt::format("ends at ({}, {}) but destination is ({}, {})", last.x, last.y,
                       worker.destination.x, worker.destination.y),
           last);
  }

  const int interval = worker.move_interval();
  std::optional<std::size_t> last_change;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Step& s = path.steps[i];
    if (!grid.contains(s)) {
      report(ViolationKind::OutOfBounds, fmt::format("step ({}, {})@{} outside grid", s.x, s.y, s.t), s);
    }
    if (s.t < worker.t_start || s.t > worker.t_end) {
      report(ViolationKind::WindowViolation,
             fmt::format("slot {} outside window [{}, {}]", s.t, worker.t_start, worker.t_end), s);
    }
    if (blocked.blocks(s)) {
      report(ViolationKind::BlockedCell, fmt::format("enters blocked cell ({}, {})@{}", s.x, s.y, s.t), s);
    }
    if (i == 0) continue;
    const Step& prev = path.steps[i - 1];
    if (s.t != prev.t + 1) {
      report(ViolationKind::TimeDiscontinuity, fmt::format("slot jumps from {} to {}", prev.t, s.t), s);
    }
    const int dist = manhattan(prev.cell(), s.cell());
    if (dist > 1) {
      report(ViolationKind::IllegalMove,
             fmt::format("({}, {}) -> ({}, {}) is not a 4-neighbour move or stay", prev.x, prev.y, s.x,
                         s.y),
             s);
    }
    if (dist >= 1) {
      if (last_change && i - *last_change < static_cast<std::size_t>(interval)) {
        report(ViolationKind::SpeedLimit,
               fmt::format("changes cell at slot {} only {} slot(s) after the previous change; "
                           "speed allows one change every {}",
                           s.t, i - *last_change, interval),
               s);
      }
      last_change = i;
    }
  }
  return result;
}

/// Per-path validation plus the GLOBAL budget check.
inline ValidationResult validate_solution(const Solution& solution, const Instance& instance,
                                          const BlockedSet& blocked = {}) {
  ValidationResult result;
  double cost = 0.0;
  for (const auto& [id, path] : solution.assignments) {
    const Worker* w = instance.find(id);
    if (w == nullptr) {
      result.add({id, ViolationKind::UnknownWorker, "worker " + to_string(id) + " is not in the pool", {}});
      continue;
    }
    result.merge(validate_path(path, *w, instance.grid, blocked));
    if (!path.empty()) cost += path_cost(path, *w);
  }
  if (cost > instance.budget + 1e-9) {
    result.add({std::nullopt, ViolationKind::BudgetExceeded,
                fmt::format("total cost {:g} > budget {:g}", cost, instance.budget), {}});
  }
  return result;
}

}  // namespace crowdsense
