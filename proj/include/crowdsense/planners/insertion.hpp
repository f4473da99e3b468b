#pragma once

#include <limits>
#include <optional>

#include "crowdsense/planners/route_plan.hpp"
#include "crowdsense/util/random.hpp"

namespace crowdsense {

namespace detail {

struct InsertionMove {
  WorkerId worker{};
  bool recruit = false;
  Cell cell;
  std::size_t pos = 0;
  std::vector<Cell> waypoints;
  Path path;
  double objective = -std::numeric_limits<double>::infinity();
  double extra_cost = 0.0;
};

inline double objective_after(CoverageState& state, const RoutePlan& plan, const InsertionMove& m) {
  auto old = plan.paths.find(m.worker);
  if (old != plan.paths.end()) state.remove(old->second);
  const double j = state.objective_with(m.path);
  if (old != plan.paths.end()) state.add(old->second);
  return j;
}

template <class Visit>
void enumerate_moves(const PlanningProblem& problem, const RoutePlan& plan, Visit&& visit) {
  for (const Worker& w : problem.workers) {
    if (plan.recruited(w.id)) {
      const auto& current = plan.waypoints.at(w.id);
      const int moves = route_moves(w, current);
      for (int y = 0; y < problem.grid.height; ++y) {
        for (int x = 0; x < problem.grid.width; ++x) {
          const Cell c{x, y};
          for (std::size_t pos = 0; pos <= current.size(); ++pos) {
            if (!insertion_fits(w, current, moves, c, pos)) continue;
            std::vector<Cell> wps = current;
            wps.insert(wps.begin() + static_cast<std::ptrdiff_t>(pos), c);
            auto path = realize_allowed(problem, w, wps);
            if (!path || *path == plan.paths.at(w.id)) continue;
            visit(InsertionMove{w.id, false, c, pos, std::move(wps), std::move(*path), 0.0, 0.0});
          }
        }
      }
    } else if (plan.cost + full_window_cost(w) <= problem.budget + 1e-9) {
      auto path = realize_allowed(problem, w, {});
      if (!path) continue;
      visit(InsertionMove{w.id, true, w.origin, 0, {}, std::move(*path), 0.0, full_window_cost(w)});
    }
  }
}

inline void commit(RoutePlan& plan, CoverageState& state, InsertionMove m) {
  auto old = plan.paths.find(m.worker);
  if (old != plan.paths.end()) state.remove(old->second);
  state.add(m.path);
  plan.cost += m.extra_cost;
  plan.waypoints[m.worker] = std::move(m.waypoints);
  plan.paths[m.worker] = std::move(m.path);
}

inline std::string describe(const InsertionMove& m) {
  if (m.recruit) {
    return fmt::format("recruit worker {} on its direct route (cost +{:g}, J {:.6f})", to_string(m.worker),
                       m.extra_cost, m.objective);
  }
  return fmt::format("insert ({}, {}) at position {} of worker {} (J {:.6f})", m.cell.x, m.cell.y, m.pos,
                     to_string(m.worker), m.objective);
}

}  // namespace detail

/// Greedy best-improvement insertion. TVPG ranks moves by resulting J (ties: lower
/// extra cost); TCPG ranks improving moves by extra cost (ties: higher J).
inline RoutePlan greedy_insertion(const PlanningProblem& problem, bool cost_priority,
                                  std::vector<std::string>& log) {
  RoutePlan plan;
  CoverageState state(problem.grid, problem.objective);
  constexpr double kEps = 1e-12;
  for (;;) {
    const double current = state.objective();
    std::optional<detail::InsertionMove> best;
    detail::enumerate_moves(problem, plan, [&](detail::InsertionMove m) {
      m.objective = detail::objective_after(state, plan, m);
      if (!(m.objective > current + kEps)) return;
      if (!best) {
        best = std::move(m);
        return;
      }
      const bool better =
          cost_priority
              ? (m.extra_cost < best->extra_cost - 1e-12 ||
                 (std::abs(m.extra_cost - best->extra_cost) <= 1e-12 && m.objective > best->objective + kEps))
              : (m.objective > best->objective + kEps ||
                 (std::abs(m.objective - best->objective) <= kEps && m.extra_cost < best->extra_cost - 1e-12));
      if (better) best = std::move(m);
    });
    if (!best) break;
    log.push_back(detail::describe(*best));
    detail::commit(plan, state, std::move(*best));
  }
  return plan;
}

/// Random recruitment order; each recruit gets random feasible waypoint
/// insertions until several consecutive draws fail to fit.
inline RoutePlan random_insertion(const PlanningProblem& problem, Rng& rng, std::vector<std::string>& log) {
  RoutePlan plan;
  std::vector<const Worker*> order;
  for (const Worker& w : problem.workers) order.push_back(&w);
  rng.shuffle(order);
  for (const Worker* w : order) {
    if (plan.cost + full_window_cost(*w) > problem.budget + 1e-9) continue;
    std::vector<Cell> wps;
    auto path = realize_allowed(problem, *w, wps);
    if (!path) continue;
    plan.cost += full_window_cost(*w);
    log.push_back(fmt::format("recruit worker {} (cost +{:g})", to_string(w->id), full_window_cost(*w)));
    for (int misses = 0, draws = 0; misses < 8 && draws < 32; ++draws) {
      const Cell c{rng.between(0, problem.grid.width - 1), rng.between(0, problem.grid.height - 1)};
      const std::size_t pos = rng.index(wps.size() + 1);
      if (!insertion_fits(*w, wps, route_moves(*w, wps), c, pos)) {
        ++misses;
        continue;
      }
      auto trial = wps;
      trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(pos), c);
      auto realized = realize_allowed(problem, *w, trial);
      if (!realized) {
        ++misses;
        continue;
      }
      wps = std::move(trial);
      path = std::move(realized);
      log.push_back(fmt::format("  insert ({}, {}) at position {}", c.x, c.y, pos));
    }
    plan.waypoints[w->id] = std::move(wps);
    plan.paths[w->id] = std::move(*path);
  }
  return plan;
}

}  // namespace crowdsense
