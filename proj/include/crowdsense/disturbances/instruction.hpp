#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/grid/types.hpp"

namespace crowdsense {

enum class DisturbanceType {
  BudgetChange,
  AreaBlocked,
  PriorityArea,
  MidPathVisit,
  WorkerUnavailable,
  NewWorkerAvailable,
  BadWeather,
  ContinueOptimize,
};

inline constexpr std::array<DisturbanceType, 8> kAllDisturbanceTypes = {
    DisturbanceType::BudgetChange,       DisturbanceType::AreaBlocked, DisturbanceType::PriorityArea,
    DisturbanceType::MidPathVisit,       DisturbanceType::WorkerUnavailable,
    DisturbanceType::NewWorkerAvailable, DisturbanceType::BadWeather,  DisturbanceType::ContinueOptimize};

inline const char* to_string(DisturbanceType t) {
  switch (t) {
    case DisturbanceType::BudgetChange: return "budget_change";
    case DisturbanceType::AreaBlocked: return "area_blocked";
    case DisturbanceType::PriorityArea: return "priority_area";
    case DisturbanceType::MidPathVisit: return "mid_path_visit";
    case DisturbanceType::WorkerUnavailable: return "worker_unavailable";
    case DisturbanceType::NewWorkerAvailable: return "new_worker_available";
    case DisturbanceType::BadWeather: return "bad_weather";
    case DisturbanceType::ContinueOptimize: return "continue_optimize";
  }
  return "?";
}

inline DisturbanceType disturbance_type_from_string(std::string_view s) {
  for (DisturbanceType t : kAllDisturbanceTypes) {
    if (s == to_string(t)) return t;
  }
  throw FormatError("unknown disturbance type '" + std::string(s) + "'");
}

inline std::size_t type_index(DisturbanceType t) { return static_cast<std::size_t>(t); }

struct RequiredVisit {
  WorkerId worker{};
  Cell cell;

  auto operator<=>(const RequiredVisit&) const = default;
};

/// One structured refinement directive. Only the payload field matching `type`
/// is meaningful; the others stay empty.
struct DisturbanceInstruction {
  DisturbanceType type = DisturbanceType::ContinueOptimize;
  std::string description;
  double amount = 0.0;                // budget delta (budget_change) or speed factor (bad_weather)
  std::vector<BlockedArea> areas;     // area_blocked
  std::vector<Cell> cells;            // priority_area
  double weight = 1.0;                // priority_area
  std::vector<RequiredVisit> visits;  // mid_path_visit
  std::vector<WorkerId> workers;      // worker_unavailable
  std::vector<Worker> new_workers;    // new_worker_available

  /// Payload equality, ignoring the free-text description.
  bool same_payload(const DisturbanceInstruction& o) const {
    return type == o.type && amount == o.amount && areas == o.areas && cells == o.cells && weight == o.weight &&
           visits == o.visits && workers == o.workers && new_workers == o.new_workers;
  }

  /// Schema check: payload shape matches the type and every cell lies in the grid.
  void validate(const GridSpec& grid) const {
    auto need = [&](bool ok, const char* what) {
      if (!ok) throw DomainError(fmt::format("{}: {}", to_string(type), what));
    };
    switch (type) {
      case DisturbanceType::BudgetChange:
        need(std::isfinite(amount), "budget delta must be finite");
        break;
      case DisturbanceType::AreaBlocked:
        need(!areas.empty(), "needs at least one cell");
        for (const BlockedArea& a : areas) {
          need(grid.contains(a.cell), "blocked cell outside grid");
          need(a.t_first >= 0 && a.t_first <= a.t_last && a.t_last < grid.num_slots, "bad slot range");
        }
        break;
      case DisturbanceType::PriorityArea:
        need(!cells.empty(), "needs at least one cell");
        for (Cell c : cells) need(grid.contains(c), "priority cell outside grid");
        need(std::isfinite(weight) && weight >= 0.0, "weight must be finite and non-negative");
        break;
      case DisturbanceType::MidPathVisit:
        need(!visits.empty(), "needs at least one (worker, cell) pair");
        for (const RequiredVisit& v : visits) need(grid.contains(v.cell), "visit cell outside grid");
        break;
      case DisturbanceType::WorkerUnavailable:
        need(!workers.empty(), "needs at least one worker id");
        break;
      case DisturbanceType::NewWorkerAvailable:
        need(!new_workers.empty(), "needs at least one worker");
        for (const Worker& w : new_workers) {
          need(grid.contains(w.origin) && grid.contains(w.destination), "new worker outside grid");
          need(w.t_start >= 0 && w.t_start < w.t_end && w.t_end < grid.num_slots, "new worker window");
          need(w.speed > 0.0 && w.reachable(), "new worker cannot reach its destination");
        }
        break;
      case DisturbanceType::BadWeather:
        need(amount > 0.0 && amount <= 1.0, "speed factor must lie in (0, 1]");
        break;
      case DisturbanceType::ContinueOptimize:
        break;
    }
  }
};

/// Whether a disturbance only tightens constraints (never relaxes them).
inline bool is_restrictive(const DisturbanceInstruction& d) {
  switch (d.type) {
    case DisturbanceType::BudgetChange: return d.amount <= 0.0;
    case DisturbanceType::AreaBlocked:
    case DisturbanceType::PriorityArea:
    case DisturbanceType::MidPathVisit:
    case DisturbanceType::WorkerUnavailable:
    case DisturbanceType::BadWeather: return true;
    case DisturbanceType::NewWorkerAvailable:
    case DisturbanceType::ContinueOptimize: return false;
  }
  return false;
}

}  // namespace crowdsense
