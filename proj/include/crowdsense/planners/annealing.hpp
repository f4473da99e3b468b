#pragma once

#include <cmath>
#include <limits>

#include "crowdsense/planners/insertion.hpp"

namespace crowdsense {

namespace detail {

enum class SaMove { SwapWaypoints, InsertWaypoint, RemoveWaypoint, ReverseWaypoints, Recruit, Drop, SwapWorker };

inline const char* to_string(SaMove m) {
  switch (m) {
    case SaMove::SwapWaypoints: return "swap-waypoints";
    case SaMove::InsertWaypoint: return "insert-waypoint";
    case SaMove::RemoveWaypoint: return "remove-waypoint";
    case SaMove::ReverseWaypoints: return "reverse-waypoints";
    case SaMove::Recruit: return "recruit";
    case SaMove::Drop: return "drop";
    case SaMove::SwapWorker: return "swap-worker";
  }
  return "?";
}

/// A proposal replaces the route of up to two workers (a removed worker has no route).
struct SaProposal {
  SaMove move{};
  struct Change {
    WorkerId worker{};
    std::optional<std::vector<Cell>> waypoints;  // nullopt = unassign
    std::optional<Path> path;
  };
  std::vector<Change> changes;
  double cost_delta = 0.0;
};

inline std::optional<SaProposal> propose(const PlanningProblem& problem, const RoutePlan& plan, Rng& rng) {
  std::vector<WorkerId> active, idle;
  for (const Worker& w : problem.workers) (plan.recruited(w.id) ? active : idle).push_back(w.id);

  const auto move = static_cast<SaMove>(rng.index(7));
  SaProposal p;
  p.move = move;
  auto reroute = [&](WorkerId id, std::vector<Cell> wps) -> bool {
    auto path = realize_allowed(problem, *problem.find(id), wps);
    if (!path) return false;
    p.changes.push_back({id, std::move(wps), std::move(*path)});
    return true;
  };

  switch (move) {
    case SaMove::SwapWaypoints:
    case SaMove::ReverseWaypoints:
    case SaMove::RemoveWaypoint:
    case SaMove::InsertWaypoint: {
      if (active.empty()) return std::nullopt;
      const WorkerId id = active[rng.index(active.size())];
      auto wps = plan.waypoints.at(id);
      if (move == SaMove::InsertWaypoint) {
        const Cell c{rng.between(0, problem.grid.width - 1), rng.between(0, problem.grid.height - 1)};
        wps.insert(wps.begin() + static_cast<std::ptrdiff_t>(rng.index(wps.size() + 1)), c);
      } else if (move == SaMove::RemoveWaypoint) {
        if (wps.empty()) return std::nullopt;
        wps.erase(wps.begin() + static_cast<std::ptrdiff_t>(rng.index(wps.size())));
      } else {
        if (wps.size() < 2) return std::nullopt;
        std::size_t i = rng.index(wps.size()), j = rng.index(wps.size());
        if (i == j) return std::nullopt;
        if (i > j) std::swap(i, j);
        if (move == SaMove::SwapWaypoints) {
          std::swap(wps[i], wps[j]);
        } else {
          std::reverse(wps.begin() + static_cast<std::ptrdiff_t>(i), wps.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        }
      }
      if (!reroute(id, std::move(wps))) return std::nullopt;
      break;
    }
    case SaMove::Recruit: {
      if (idle.empty()) return std::nullopt;
      const WorkerId id = idle[rng.index(idle.size())];
      p.cost_delta = full_window_cost(*problem.find(id));
      if (!reroute(id, {})) return std::nullopt;
      break;
    }
    case SaMove::Drop: {
      if (active.empty()) return std::nullopt;
      const WorkerId id = active[rng.index(active.size())];
      p.cost_delta = -full_window_cost(*problem.find(id));
      p.changes.push_back({id, std::nullopt, std::nullopt});
      break;
    }
    case SaMove::SwapWorker: {
      if (active.empty() || idle.empty()) return std::nullopt;
      const WorkerId out = active[rng.index(active.size())];
      const WorkerId in = idle[rng.index(idle.size())];
      p.cost_delta = full_window_cost(*problem.find(in)) - full_window_cost(*problem.find(out));
      p.changes.push_back({out, std::nullopt, std::nullopt});
      if (!reroute(in, {})) return std::nullopt;
      break;
    }
  }
  if (plan.cost + p.cost_delta > problem.budget + 1e-9) return std::nullopt;
  return p;
}

/// Applies `p` to (plan, state); returns the undo record.
inline SaProposal apply(RoutePlan& plan, CoverageState& state, const SaProposal& p) {
  SaProposal undo;
  undo.move = p.move;
  undo.cost_delta = -p.cost_delta;
  for (const auto& change : p.changes) {
    SaProposal::Change previous{change.worker, std::nullopt, std::nullopt};
    if (auto it = plan.paths.find(change.worker); it != plan.paths.end()) {
      previous.waypoints = plan.waypoints.at(change.worker);
      previous.path = it->second;
      state.remove(it->second);
      plan.paths.erase(it);
      plan.waypoints.erase(change.worker);
    }
    if (change.path) {
      state.add(*change.path);
      plan.paths[change.worker] = *change.path;
      plan.waypoints[change.worker] = *change.waypoints;
    }
    undo.changes.push_back(std::move(previous));
  }
  std::reverse(undo.changes.begin(), undo.changes.end());
  plan.cost += p.cost_delta;
  return undo;
}

inline double delta_objective(double before, double after) {
  if (std::isinf(before) && std::isinf(after)) return 0.0;
  return after - before;
}

}  // namespace detail

/// Simulated annealing over waypoint plans from a given start. Tracks and returns
/// the best plan seen.
inline RoutePlan anneal(const PlanningProblem& problem, RoutePlan start, const AnnealingConfig& cfg, Rng& rng,
                        std::vector<std::string>& log, int restart) {
  CoverageState state(problem.grid, problem.objective);
  for (const auto& [id, path] : start.paths) state.add(path);
  RoutePlan best = start;
  double best_j = state.objective();
  double current_j = best_j;
  RoutePlan plan = std::move(start);
  int accepted = 0, improved = 0;
  for (int iter = 0; iter < cfg.iters_per_restart; ++iter) {
    const double temperature = cfg.t0 * std::pow(cfg.decay, iter / cfg.batch);
    auto proposal = detail::propose(problem, plan, rng);
    if (!proposal) continue;
    auto undo = detail::apply(plan, state, *proposal);
    const double candidate_j = state.objective();
    const double delta = detail::delta_objective(current_j, candidate_j);
    const bool accept = delta >= 0.0 || rng.unit() < std::exp(delta / temperature);
    if (!accept) {
      detail::apply(plan, state, undo);
      continue;
    }
    ++accepted;
    current_j = candidate_j;
    if (current_j > best_j + 1e-12) {
      best_j = current_j;
      best = plan;
      ++improved;
      log.push_back(fmt::format("restart {} iter {}: {} -> best J {:.6f}", restart, iter,
                                detail::to_string(proposal->move), best_j));
    }
  }
  log.push_back(fmt::format("restart {}: {} accepted, {} improvements, best J {:.6f}", restart, accepted, improved,
                            best_j));
  return best;
}

}  // namespace crowdsense
