#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "crowdsense/planners/path_dp.hpp"
#include "crowdsense/planners/route_plan.hpp"

namespace crowdsense {

struct RouteChoice {
  WorkerId worker{};
  Path path;
  double score = -std::numeric_limits<double>::infinity();  // J after adding, plus any step bonus
  double cost = 0.0;
};

inline double bonus_total(const Path& path, const StepBonus& bonus) {
  if (!bonus) return 0.0;
  double total = 0.0;
  for (const Step& s : path.steps) total += bonus(s);
  return total;
}

/// Best route for `w` given current coverage and remaining budget: DP candidates for
/// every end slot are re-scored by true J; ties go to the cheaper route.
inline std::optional<RouteChoice> best_route_for(const Worker& w, const PlanningProblem& problem,
                                                 CoverageState& state, double budget_left,
                                                 const StepBonus& bonus = {}) {
  const int max_steps = affordable_steps(w, budget_left);
  if (max_steps < 1) return std::nullopt;
  const DpResult dp = path_dp(w, problem.grid, state, route_query(w, problem, max_steps), problem.blocked, bonus);
  std::optional<RouteChoice> best;
  for (const DpCandidate& cand : dp.candidates) {
    const double score = state.objective_with(cand.path) + bonus_total(cand.path, bonus);
    const double cost = path_cost(cand.path, w);
    if (!best || score > best->score + 1e-12 || (std::abs(score - best->score) <= 1e-12 && cost < best->cost)) {
      best = RouteChoice{w.id, cand.path, score, cost};
    }
  }
  return best;
}

namespace detail {

struct GreedyState {
  Solution solution;
  CoverageState coverage;
  double cost = 0.0;
  double bonus = 0.0;

  double score() const { return coverage.objective() + bonus; }
};

inline GreedyState make_greedy_state(const PlanningProblem& problem, const Solution& start, const StepBonus& bonus) {
  GreedyState g{start, CoverageState(problem.grid, problem.objective), 0.0, 0.0};
  for (const auto& [id, path] : start.assignments) {
    g.coverage.add(path);
    g.bonus += bonus_total(path, bonus);
    if (const Worker* w = problem.find(id)) g.cost += path_cost(path, *w);
  }
  return g;
}

/// Repeatedly recruits the idle worker whose best route buys the most score per
/// budget unit, re-ranking after every commitment.
inline void greedy_fill(const PlanningProblem& problem, GreedyState& g, std::vector<std::string>& log,
                        const StepBonus& bonus) {
  for (;;) {
    const double current = g.score();
    // Gain per budget unit; on empty coverage every route has infinite gain, so compare J.
    auto rate = [&](const RouteChoice& c) {
      return std::isinf(current) ? c.score : (c.score - current) / std::max(c.cost, 1e-9);
    };
    std::optional<RouteChoice> best;
    for (const Worker& w : problem.workers) {
      if (g.solution.contains(w.id)) continue;
      auto choice = best_route_for(w, problem, g.coverage, problem.budget - g.cost, bonus);
      if (!choice) continue;
      if (!best || rate(*choice) > rate(*best) + 1e-12) {
        best = std::move(choice);
      }
    }
    if (!best || !(best->score > current + 1e-12)) return;
    log.push_back(fmt::format("dp: recruit worker {} for slots {}..{} (cost {:g}, J {:.6f})", to_string(best->worker),
                              best->path.front().t, best->path.back().t, best->cost,
                              best->score - g.bonus - bonus_total(best->path, bonus)));
    g.coverage.add(best->path);
    g.bonus += bonus_total(best->path, bonus);
    g.cost += best->cost;
    g.solution.assignments[best->worker] = std::move(best->path);
  }
}

/// Hill-climbing swaps: a selected worker's route is replaced by the best route of
/// an idle worker or a better route of its own. Stops when the best swap gains
/// less than 1e-9.
inline void replacement_rounds(const PlanningProblem& problem, GreedyState& g, int rounds_max,
                               std::vector<std::string>& log, const StepBonus& bonus) {
  for (int round = 0; round < rounds_max; ++round) {
    const double current = g.score();
    std::optional<RouteChoice> best;
    WorkerId best_out{};
    double best_gain = 0.0;
    const auto selected = g.solution.assignments;
    for (const auto& [out_id, out_path] : selected) {
      const Worker* out = problem.find(out_id);
      if (out == nullptr) continue;
      const double out_cost = path_cost(out_path, *out);
      const double out_bonus = bonus_total(out_path, bonus);
      g.coverage.remove(out_path);
      for (const Worker& w : problem.workers) {
        if (g.solution.contains(w.id) && w.id != out_id) continue;
        auto choice = best_route_for(w, problem, g.coverage, problem.budget - (g.cost - out_cost), bonus);
        if (!choice) continue;
        const double gain = choice->score + (g.bonus - out_bonus) - current;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_out = out_id;
          best = std::move(choice);
        }
      }
      g.coverage.add(out_path);
    }
    if (!best || best_gain < 1e-9) return;
    const Path& out_path = g.solution.assignments.at(best_out);
    g.coverage.remove(out_path);
    g.bonus -= bonus_total(out_path, bonus);
    g.cost -= path_cost(out_path, *problem.find(best_out));
    g.solution.assignments.erase(best_out);
    log.push_back(fmt::format("replace worker {} with worker {} (gain {:.6f})", to_string(best_out),
                              to_string(best->worker), best_gain));
    g.coverage.add(best->path);
    g.bonus += bonus_total(best->path, bonus);
    g.cost += best->cost;
    g.solution.assignments[best->worker] = std::move(best->path);
  }
}

/// Compound move for budget packing: a selected worker's route is shortened (or
/// dropped) and the freed budget refilled greedily. One-for-one swaps cannot
/// trade one long route for two short ones; this can.
inline void trim_and_refill_rounds(const PlanningProblem& problem, GreedyState& g, int rounds_max,
                                   std::vector<std::string>& log, const StepBonus& bonus) {
  for (int round = 0; round < rounds_max; ++round) {
    const double current = g.score();
    std::optional<GreedyState> best;
    std::string best_note;
    double best_gain = 0.0;
    for (const auto& [out_id, out_path] : g.solution.assignments) {
      const Worker* w = problem.find(out_id);
      if (w == nullptr) continue;
      const double out_cost = path_cost(out_path, *w);
      GreedyState without = g;
      without.coverage.remove(out_path);
      without.bonus -= bonus_total(out_path, bonus);
      without.cost -= out_cost;
      without.solution.assignments.erase(out_id);

      std::vector<std::optional<Path>> options{std::nullopt};
      const int max_steps = static_cast<int>(out_path.size()) - 1;
      if (max_steps >= 1) {
        const DpResult dp = path_dp(*w, problem.grid, without.coverage, route_query(*w, problem, max_steps),
                                    problem.blocked, bonus);
        for (const DpCandidate& c : dp.candidates) options.emplace_back(c.path);
      }
      for (const auto& option : options) {
        GreedyState trial = without;
        if (option) {
          trial.coverage.add(*option);
          trial.bonus += bonus_total(*option, bonus);
          trial.cost += path_cost(*option, *w);
          trial.solution.assignments[out_id] = *option;
        }
        std::vector<std::string> scratch;
        greedy_fill(problem, trial, scratch, bonus);
        const double gain = trial.score() - current;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_note = option ? fmt::format("trim worker {} to {} steps and refill (gain {:.6f})", to_string(out_id),
                                           option->size(), gain)
                             : fmt::format("drop worker {} and refill (gain {:.6f})", to_string(out_id), gain);
          best = std::move(trial);
        }
      }
    }
    if (!best || best_gain < 1e-9) return;
    log.push_back(best_note);
    g = std::move(*best);
  }
}

}  // namespace detail

inline Solution graphdp_plan(const PlanningProblem& problem, const GraphDpConfig& cfg, std::vector<std::string>& log,
                             const Solution& start = {}, const StepBonus& bonus = {}) {
  auto g = detail::make_greedy_state(problem, start, bonus);
  detail::greedy_fill(problem, g, log, bonus);
  detail::replacement_rounds(problem, g, cfg.replacement_rounds_max, log, bonus);
  detail::greedy_fill(problem, g, log, bonus);
  detail::trim_and_refill_rounds(problem, g, cfg.replacement_rounds_max, log, bonus);
  return g.solution;
}

struct GraphDpPath {
  std::optional<Path> path;
  double gain = 0.0;
  std::string infeasible;

  explicit operator bool() const { return path.has_value(); }
};

/// Best single route for `worker` on top of `base_coverage`, capped by the
/// instance budget. `gain` is the marginal change in J.
inline GraphDpPath graphdp_best_path(const Worker& worker, const CoverageMap& base_coverage, const Instance& instance) {
  const PlanningProblem problem = PlanningProblem::from(instance);
  CoverageState state(base_coverage, problem.objective);
  const int max_steps = affordable_steps(worker, instance.budget);
  GraphDpPath out;
  const DpResult dp = path_dp(worker, problem.grid, state, route_query(worker, problem, max_steps));
  if (!dp.ok()) {
    out.infeasible = dp.infeasible.value_or("no route");
    return out;
  }
  auto choice = best_route_for(worker, problem, state, instance.budget);
  const double before = state.objective();
  out.gain = state.quantity() == 0 ? std::numeric_limits<double>::infinity() : choice->score - before;
  out.path = std::move(choice->path);
  return out;
}

/// Swap loop on an existing feasible solution.
inline Solution worker_replacement(const Solution& solution, const Instance& instance, const GraphDpConfig& cfg = {},
                                   std::vector<std::string>* log = nullptr) {
  const PlanningProblem problem = PlanningProblem::from(instance);
  auto g = detail::make_greedy_state(problem, solution, {});
  std::vector<std::string> scratch;
  detail::replacement_rounds(problem, g, cfg.replacement_rounds_max, log ? *log : scratch, {});
  return g.solution;
}

}  // namespace crowdsense
