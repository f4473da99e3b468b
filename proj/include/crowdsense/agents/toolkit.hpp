#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/edit.hpp"
#include "crowdsense/disturbances/handling.hpp"
#include "crowdsense/planners/graphdp.hpp"

namespace crowdsense {

/// Which edits the refinement may make beyond repairs, decided by the disturbance.
enum class SolverScope {
  Open,         // continue optimising: every improving edit
  Growth,       // budget increase: add workers, extend or reroute routes
  NewWorkers,   // new workers: only edits that bring a new worker in
  Priority,     // priority area: improvements scored with a per-visit bonus
  Restrictive,  // tightened constraints: repair, then compensate only below the baseline J
};

inline const char* to_string(SolverScope s) {
  switch (s) {
    case SolverScope::Open: return "open";
    case SolverScope::Growth: return "growth";
    case SolverScope::NewWorkers: return "new-workers";
    case SolverScope::Priority: return "priority";
    case SolverScope::Restrictive: return "restrictive";
  }
  return "?";
}

inline SolverScope scope_for(const DisturbedInstance& d) {
  bool priority = false, fresh = false, growth = false;
  for (const DisturbanceInstruction& i : d.active) {
    if (i.type == DisturbanceType::PriorityArea) {
      priority = true;
    } else if (is_restrictive(i)) {
      return SolverScope::Restrictive;
    } else if (i.type == DisturbanceType::NewWorkerAvailable) {
      fresh = true;
    } else if (i.type == DisturbanceType::BudgetChange) {
      growth = true;
    }
  }
  if (priority) return SolverScope::Priority;
  if (fresh) return SolverScope::NewWorkers;
  if (growth) return SolverScope::Growth;
  return SolverScope::Open;
}

/// Violation count plus budget overrun; compared lexicographically.
struct Health {
  int violations = 0;
  double overrun = 0.0;

  bool clean() const { return violations == 0; }
  bool better_than(const Health& o) const {
    return violations < o.violations || (violations == o.violations && overrun < o.overrun - 1e-9);
  }
  bool no_worse_than(const Health& o) const { return !o.better_than(*this) && !(o.violations < violations); }
};

/// Everything the agents need to judge solutions under one disturbed instance.
struct Workspace {
  const DisturbedInstance* disturbed = nullptr;
  Instance effective;
  PlanningProblem problem;
  SolverScope scope = SolverScope::Open;
  double bonus_per_visit = 0.0;
  std::set<WorkerId> fresh;  // workers added by the disturbance

  /// `baseline_quantity` sizes the priority bonus: weight / Q(baseline) per visit.
  Workspace(const DisturbedInstance& d, long baseline_quantity)
      : disturbed(&d), effective(d.effective_instance()), problem(d.problem()), scope(scope_for(d)) {
    if (!d.priority_cells.empty()) {
      bonus_per_visit = d.priority_weight / static_cast<double>(std::max(baseline_quantity, 1L));
    }
    for (const Worker& w : d.added) fresh.insert(w.id);
  }

  bool is_priority(Cell c) const {
    const auto& cells = disturbed->priority_cells;
    return std::find(cells.begin(), cells.end(), c) != cells.end();
  }

  StepBonus bonus() const {
    if (bonus_per_visit <= 0.0) return {};
    return [this](const Step& s) { return is_priority(s.cell()) ? bonus_per_visit : 0.0; };
  }

  const Worker* worker(WorkerId id) const { return problem.find(id); }
};

struct Assessment {
  Health health;
  double objective = -std::numeric_limits<double>::infinity();
  double score = -std::numeric_limits<double>::infinity();  // objective plus priority bonus
  double cost = 0.0;
  ValidationResult validation;
  HandlingReport handling;

  bool feasible() const { return validation.feasible && handling.all_satisfied; }
};

inline Assessment assess(const Solution& s, const Workspace& ws) {
  Assessment a;
  a.validation = validate_solution(s, ws.effective, ws.problem.blocked);
  a.handling = check_handling(s, *ws.disturbed);
  a.cost = solution_cost(s, ws.effective);
  a.health.violations = static_cast<int>(a.validation.violations.size()) + a.handling.issues();
  a.health.overrun = std::max(0.0, a.cost - ws.effective.budget);
  CoverageState state(ws.problem.grid, ws.problem.objective);
  double bonus = 0.0;
  for (const auto& [id, path] : s.assignments) {
    state.add(path);
    if (ws.bonus_per_visit > 0.0) {
      for (const Step& st : path.steps) bonus += ws.is_priority(st.cell()) ? ws.bonus_per_visit : 0.0;
    }
  }
  a.objective = state.objective();
  a.score = a.objective + bonus;
  return a;
}

namespace detail {

inline CoverageState coverage_without(const Solution& s, const Workspace& ws, std::optional<WorkerId> skip) {
  CoverageState state(ws.problem.grid, ws.problem.objective);
  for (const auto& [id, path] : s.assignments) {
    if (skip && id == *skip) continue;
    state.add(path);
  }
  return state;
}

/// Slots since the path last changed cell at index i, capped at interval - 1.
/// An unmoved prefix counts as rested.
inline int since_change_at(const Path& p, std::size_t i, int interval) {
  int d = 0;
  std::size_t j = i;
  while (j > 0 && p.steps[j - 1].cell() == p.steps[j].cell()) {
    ++d;
    --j;
  }
  if (j == 0) return interval - 1;
  return std::min(d, interval - 1);
}

inline bool path_ok(const Path& p, const Worker& w, const Workspace& ws) {
  return validate_path(p, w, ws.problem.grid, ws.problem.blocked).feasible && ws.problem.covers_required(w.id, p);
}

/// Cells entered by `after` that `before` never visits.
inline std::vector<Cell> new_cells(const Path& before, const Path& after) {
  std::vector<Cell> out;
  for (const Step& s : after.steps) {
    const Cell c = s.cell();
    if (!before.visits(c) && std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

/// Best whole route for `w` that costs at most `budget_left`, on coverage that
/// excludes the worker's own current path.
inline std::optional<RouteChoice> fresh_route(const Worker& w, const Workspace& ws, CoverageState& state,
                                              double budget_left) {
  return best_route_for(w, ws.problem, state, budget_left, ws.bonus());
}

}  // namespace detail

/// Replaces the smallest window around the blocked steps of `p` with a DP detour
/// that arrives where and when the old path did, widening the window until the
/// whole path validates. Falls back to a fresh route of no greater cost.
inline std::optional<Path> reroute_around_blocked(const Solution& s, WorkerId id, const Workspace& ws) {
  const Worker* w = ws.worker(id);
  const Path& p = s.assignments.at(id);
  if (w == nullptr || p.empty()) return std::nullopt;
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (ws.problem.blocked.blocks(p.steps[i])) {
      if (!first) first = i;
      last = i;
    }
  }
  if (!first) return std::nullopt;
  CoverageState state = detail::coverage_without(s, ws, id);
  const int interval = w->move_interval();
  const auto& required = ws.problem.required_for(id);
  std::optional<std::pair<std::size_t, std::size_t>> tried;
  for (std::size_t margin = 1; margin <= p.size(); ++margin) {
    const std::size_t i = *first >= margin ? *first - margin : 0;
    const std::size_t j = std::min(p.size() - 1, *last + margin);
    if (tried && tried->first == i && tried->second == j) break;
    tried = std::pair{i, j};
    if (ws.problem.blocked.blocks(p.steps[i]) || ws.problem.blocked.blocks(p.steps[j])) continue;
    DpQuery q;
    q.start = p.steps[i];
    q.since_change = detail::since_change_at(p, i, interval);
    q.target = p.steps[j].cell();
    q.earliest_end = q.latest_end = p.steps[j].t;
    for (Cell c : required) {
      bool outside = false;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if ((k < i || k > j) && p.steps[k].cell() == c) outside = true;
      }
      if (!outside) q.required.push_back(c);
    }
    const DpResult dp = path_dp(*w, ws.problem.grid, state, q, ws.problem.blocked, ws.bonus());
    if (!dp.ok()) continue;
    Path out;
    out.steps.assign(p.steps.begin(), p.steps.begin() + static_cast<std::ptrdiff_t>(i));
    const Path& seg = dp.candidates.back().path;
    out.steps.insert(out.steps.end(), seg.steps.begin(), seg.steps.end());
    out.steps.insert(out.steps.end(), p.steps.begin() + static_cast<std::ptrdiff_t>(j) + 1, p.steps.end());
    if (detail::path_ok(out, *w, ws)) return out;
  }
  auto choice = detail::fresh_route(*w, ws, state, path_cost(p, *w));
  if (choice && detail::path_ok(choice->path, *w, ws)) return choice->path;
  return std::nullopt;
}

/// Re-realises the path's turning points at the worker's (slowed) speed with the
/// same end slot, dropping trailing waypoints until it fits. Falls back to a
/// fresh route of no greater cost.
inline std::optional<Path> retime_for_speed(const Solution& s, WorkerId id, const Workspace& ws) {
  const Worker* w = ws.worker(id);
  const Path& p = s.assignments.at(id);
  if (w == nullptr || p.empty()) return std::nullopt;
  const int end = p.back().t;
  if (end >= w->t_start && end <= w->t_end) {
    std::vector<Cell> points = turning_points(p);
    for (;;) {
      const RealizeResult r = realize_path(*w, points, ws.problem.grid, end);
      if (r && detail::path_ok(*r.path, *w, ws)) return *r.path;
      if (points.empty()) break;
      points.pop_back();
    }
  }
  CoverageState state = detail::coverage_without(s, ws, id);
  auto choice = detail::fresh_route(*w, ws, state, path_cost(p, *w));
  if (choice && detail::path_ok(choice->path, *w, ws)) return choice->path;
  return std::nullopt;
}

/// Route through every required cell of `id`, paid from the worker's current
/// cost plus `slack`.
inline std::optional<Path> route_with_required(const Solution& s, WorkerId id, const Workspace& ws, double slack) {
  const Worker* w = ws.worker(id);
  if (w == nullptr) return std::nullopt;
  auto it = s.assignments.find(id);
  const double own = it == s.assignments.end() ? 0.0 : path_cost(it->second, *w);
  CoverageState state = detail::coverage_without(s, ws, id);
  auto choice = detail::fresh_route(*w, ws, state, own + std::max(0.0, slack));
  if (choice && detail::path_ok(choice->path, *w, ws)) return choice->path;
  return std::nullopt;
}

/// Edits that each remove at least one constraint violation of `s`, or are the
/// only way to do so (dropping a worker whose path cannot be repaired).
inline std::vector<Edit> repair_edits(const Solution& s, const Workspace& ws) {
  std::vector<Edit> out;
  const double cost = solution_cost(s, ws.effective);
  const double slack = ws.effective.budget - cost;
  auto remove = [&](WorkerId id, std::string why) {
    out.push_back({EditKind::RemoveWorker, {id}, {}, std::nullopt, std::move(why)});
  };
  for (const auto& [id, path] : s.assignments) {
    const Worker* w = ws.worker(id);
    if (w == nullptr) {
      remove(id, fmt::format("worker {} is not available", to_string(id)));
      continue;
    }
    const ValidationResult v = validate_path(path, *w, ws.problem.grid, ws.problem.blocked);
    const std::size_t before = out.size();
    bool blocked = false, speed = false, other = false;
    for (const Violation& x : v.violations) {
      if (x.kind == ViolationKind::BlockedCell) {
        blocked = true;
      } else if (x.kind == ViolationKind::SpeedLimit) {
        speed = true;
      } else {
        other = true;
      }
    }
    if (blocked && !other) {
      if (auto p = reroute_around_blocked(s, id, ws)) {
        out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, *p), *p,
                       fmt::format("detour around blocked cells for worker {}", to_string(id))});
      }
    }
    if (speed && !other && !blocked) {
      if (auto p = retime_for_speed(s, id, ws)) {
        out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, *p), *p,
                       fmt::format("retime worker {} for the reduced speed", to_string(id))});
      }
    }
    if (other || ((blocked || speed) && out.size() == before)) {
      if (auto p = route_with_required(s, id, ws, std::max(0.0, slack))) {
        out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, *p), *p,
                       fmt::format("replan invalid route of worker {}", to_string(id))});
      }
    }
    if (!v.feasible) remove(id, fmt::format("drop worker {} whose route cannot be kept valid", to_string(id)));
    for (Cell c : ws.problem.required_for(id)) {
      if (path.visits(c)) continue;
      if (auto p = route_with_required(s, id, ws, std::max(0.0, slack))) {
        out.push_back({EditKind::InsertWaypoint, {id}, {c}, *p,
                       fmt::format("worker {} must visit ({}, {})", to_string(id), c.x, c.y)});
      }
      break;
    }
  }
  for (const auto& [id, cells] : ws.problem.required) {
    if (s.contains(id) || ws.worker(id) == nullptr) continue;
    if (auto p = route_with_required(s, id, ws, std::max(0.0, slack))) {
      out.push_back({EditKind::AddWorker, {id}, {}, *p,
                     fmt::format("recruit worker {} for its required visits", to_string(id))});
    }
  }
  if (slack < -1e-9) {
    for (const auto& [id, path] : s.assignments) {
      const Worker* w = ws.worker(id);
      if (w == nullptr) continue;
      remove(id, fmt::format("drop worker {} to get back within budget", to_string(id)));
      const double own = path_cost(path, *w);
      if (own + slack > 0.0) {
        CoverageState state = detail::coverage_without(s, ws, id);
        auto choice = detail::fresh_route(*w, ws, state, own + slack);
        if (choice && choice->path != path && detail::path_ok(choice->path, *w, ws)) {
          out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, choice->path), choice->path,
                         fmt::format("shorten worker {} to save budget", to_string(id))});
        }
      }
    }
  }
  if (ws.disturbed->baseline_priority_count &&
      priority_visits(s, ws.disturbed->priority_cells) < *ws.disturbed->baseline_priority_count) {
    for (const auto& [id, path] : s.assignments) {
      const Worker* w = ws.worker(id);
      if (w == nullptr) continue;
      CoverageState state = detail::coverage_without(s, ws, id);
      auto choice = detail::fresh_route(*w, ws, state, path_cost(path, *w) + std::max(0.0, slack));
      if (choice && choice->path != path && detail::path_ok(choice->path, *w, ws)) {
        out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, choice->path), choice->path,
                       fmt::format("route worker {} through the priority area", to_string(id))});
      }
    }
  }
  return out;
}

struct ImprovementKinds {
  bool add = true;
  bool remove = true;
  bool swap = true;
  bool reroute = true;
  bool local = true;  // segment detours and waypoint insertion / removal
};

namespace detail {

inline double route_score(CoverageState& others, const Path& p, const Workspace& ws) {
  return others.objective_with(p) + bonus_total(p, ws.bonus());
}

/// Best detour over a short window of `p` that leaves and rejoins the path at
/// the same steps, judged by exact J with the rest of the path in the base.
inline std::optional<Path> best_segment_detour(const Path& p, const Worker& w, const Workspace& ws,
                                               CoverageState& others, double floor) {
  std::optional<Path> best;
  double best_score = floor;
  const int interval = w.move_interval();
  for (std::size_t len : {4u, 8u}) {
    if (p.size() <= len) continue;
    for (std::size_t i = 0; i + len < p.size(); i += len / 2) {
      const std::size_t j = i + len;
      CoverageState base = others;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (k < i || k > j) base.add(p.steps[k]);
      }
      DpQuery q;
      q.start = p.steps[i];
      q.since_change = since_change_at(p, i, interval);
      q.target = p.steps[j].cell();
      q.earliest_end = q.latest_end = p.steps[j].t;
      for (Cell c : ws.problem.required_for(w.id)) {
        bool outside = false;
        for (std::size_t k = 0; k < p.size(); ++k) outside = outside || ((k < i || k > j) && p.steps[k].cell() == c);
        if (!outside) q.required.push_back(c);
      }
      const DpResult dp = path_dp(w, ws.problem.grid, base, q, ws.problem.blocked, ws.bonus());
      if (!dp.ok()) continue;
      Path out;
      out.steps.assign(p.steps.begin(), p.steps.begin() + static_cast<std::ptrdiff_t>(i));
      const Path& seg = dp.candidates.back().path;
      out.steps.insert(out.steps.end(), seg.steps.begin(), seg.steps.end());
      out.steps.insert(out.steps.end(), p.steps.begin() + static_cast<std::ptrdiff_t>(j) + 1, p.steps.end());
      if (out == p) continue;
      const double score = route_score(others, out, ws);
      if (score > best_score + 1e-9 && path_ok(out, w, ws)) {
        best_score = score;
        best = std::move(out);
      }
    }
  }
  return best;
}

struct WaypointChange {
  Path path;
  Cell cell;
  bool insert = true;
};

/// Best single waypoint insertion or removal on the path's turning points,
/// realised to the same end slot or, with spare budget, to a later one.
inline std::optional<WaypointChange> best_waypoint_change(const Path& p, const Worker& w, const Workspace& ws,
                                                          CoverageState& others, double floor, double slack) {
  std::optional<WaypointChange> best;
  double best_score = floor;
  const std::vector<Cell> points = turning_points(p);
  const int extra = std::min(affordable_steps(w, slack), w.t_end - p.back().t);
  std::vector<int> ends{p.back().t};
  if (extra > 0) ends.push_back(p.back().t + extra);
  auto consider = [&](const std::vector<Cell>& wps, int end, Cell c, bool insert) {
    const RealizeResult r = realize_path(w, wps, ws.problem.grid, end);
    if (!r || *r.path == p) return;
    const double score = route_score(others, *r.path, ws);
    if (score > best_score + 1e-9 && path_ok(*r.path, w, ws)) {
      best_score = score;
      best = WaypointChange{*r.path, c, insert};
    }
  };
  for (int end : ends) {
    if (end < w.t_start || end > w.t_end) continue;
    for (std::size_t pos = 0; pos <= points.size(); ++pos) {
      for (int y = 0; y < ws.problem.grid.height; ++y) {
        for (int x = 0; x < ws.problem.grid.width; ++x) {
          const Cell c{x, y};
          if (ws.problem.blocked.blocks_ever(c)) continue;
          std::vector<Cell> wps = points;
          wps.insert(wps.begin() + static_cast<std::ptrdiff_t>(pos), c);
          consider(wps, end, c, true);
        }
      }
    }
    for (std::size_t pos = 0; pos < points.size(); ++pos) {
      std::vector<Cell> wps = points;
      wps.erase(wps.begin() + static_cast<std::ptrdiff_t>(pos));
      consider(wps, end, points[pos], false);
    }
  }
  return best;
}

}  // namespace detail

/// Objective-raising edits that keep the budget: recruit idle workers, re-plan
/// selected workers, swap a selected worker for an idle one, or drop a worker.
inline std::vector<Edit> improvement_edits(const Solution& s, const Workspace& ws, ImprovementKinds kinds) {
  std::vector<Edit> out;
  const double slack = std::max(0.0, ws.effective.budget - solution_cost(s, ws.effective));
  CoverageState all = detail::coverage_without(s, ws, std::nullopt);
  if (kinds.add) {
    for (const Worker& w : ws.problem.workers) {
      if (s.contains(w.id)) continue;
      auto choice = detail::fresh_route(w, ws, all, slack);
      if (choice && detail::path_ok(choice->path, w, ws)) {
        out.push_back({EditKind::AddWorker, {w.id}, {}, choice->path,
                       fmt::format("recruit idle worker {} with the spare budget", to_string(w.id))});
      }
    }
  }
  for (const auto& [id, path] : s.assignments) {
    const Worker* w = ws.worker(id);
    if (w == nullptr) continue;
    const double own = path_cost(path, *w);
    all.remove(path);
    if (kinds.reroute) {
      auto choice = detail::fresh_route(*w, ws, all, own + slack);
      if (choice && choice->path != path && detail::path_ok(choice->path, *w, ws)) {
        out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, choice->path), choice->path,
                       fmt::format("re-plan worker {} against the other routes", to_string(id))});
      }
    }
    if (kinds.local) {
      const double floor = detail::route_score(all, path, ws);
      if (auto d = detail::best_segment_detour(path, *w, ws, all, floor)) {
        out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(path, *d), *d,
                       fmt::format("local detour for worker {} into thinner coverage", to_string(id))});
      }
      if (auto c = detail::best_waypoint_change(path, *w, ws, all, floor, slack)) {
        out.push_back({c->insert ? EditKind::InsertWaypoint : EditKind::RemoveWaypoint, {id}, {c->cell}, c->path,
                       c->insert ? fmt::format("worker {} passes through ({}, {})", to_string(id), c->cell.x, c->cell.y)
                                 : fmt::format("worker {} skips the turn at ({}, {})", to_string(id), c->cell.x,
                                               c->cell.y)});
      }
    }
    if (kinds.swap) {
      for (const Worker& in : ws.problem.workers) {
        if (s.contains(in.id)) continue;
        auto choice = detail::fresh_route(in, ws, all, own + slack);
        if (choice && detail::path_ok(choice->path, in, ws)) {
          out.push_back({EditKind::SwapWorkers, {id, in.id}, {}, choice->path,
                         fmt::format("replace worker {} by worker {}", to_string(id), to_string(in.id))});
        }
      }
    }
    if (kinds.remove) {
      out.push_back({EditKind::RemoveWorker, {id}, {}, std::nullopt,
                     fmt::format("worker {} adds mostly redundant coverage", to_string(id))});
    }
    all.add(path);
  }
  return out;
}

/// Re-plans `id` with a bonus for entering `region`, keeping the current cost
/// plus `slack`. Used for the Eval agent's reroute-through-region suggestions.
inline std::optional<Path> reroute_through_region(const Solution& s, WorkerId id, const std::vector<Cell>& region,
                                                  const Workspace& ws, double slack) {
  const Worker* w = ws.worker(id);
  auto it = s.assignments.find(id);
  if (w == nullptr || it == s.assignments.end()) return std::nullopt;
  CoverageState state = detail::coverage_without(s, ws, id);
  const StepBonus base = ws.bonus();
  const StepBonus pull = [&](const Step& st) {
    const bool inside = std::find(region.begin(), region.end(), st.cell()) != region.end();
    return (inside ? 0.05 : 0.0) + (base ? base(st) : 0.0);
  };
  const int max_steps = affordable_steps(*w, path_cost(it->second, *w) + std::max(0.0, slack));
  if (max_steps < 1) return std::nullopt;
  const DpResult dp = path_dp(*w, ws.problem.grid, state, route_query(*w, ws.problem, max_steps), ws.problem.blocked,
                              pull);
  std::optional<Path> best;
  double best_j = -std::numeric_limits<double>::infinity();
  for (const DpCandidate& c : dp.candidates) {
    bool enters = false;
    for (const Step& st : c.path.steps) {
      enters = enters || std::find(region.begin(), region.end(), st.cell()) != region.end();
    }
    if (!enters || !detail::path_ok(c.path, *w, ws)) continue;
    const double j = state.objective_with(c.path);
    if (!best || j > best_j + 1e-12) {
      best = c.path;
      best_j = j;
    }
  }
  if (best && *best == it->second) return std::nullopt;
  return best;
}

}  // namespace crowdsense
