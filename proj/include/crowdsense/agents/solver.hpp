#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/eval.hpp"
#include "crowdsense/agents/memory.hpp"

namespace crowdsense {

struct SolverOptions {
  int batch_max = 3;
  /// J of the undisturbed baseline; restrictive disturbances only compensate below it.
  double baseline_objective = std::numeric_limits<double>::infinity();
  bool allow_excursions = true;
};

struct SolverStep {
  Solution solution;
  std::vector<Edit> edits;
  std::vector<std::string> rejected;
  std::string explanation;
  bool excursion = false;  // the last edit deliberately went over budget
};

inline std::vector<EditKind> edit_kinds_for(MetaOpType op) {
  switch (op) {
    case MetaOpType::AddWorker: return {EditKind::AddWorker};
    case MetaOpType::RemoveWorker: return {EditKind::RemoveWorker};
    case MetaOpType::ModifyPath: return {EditKind::RerouteSegment, EditKind::InsertWaypoint, EditKind::RemoveWaypoint};
    case MetaOpType::Other: return {EditKind::SwapWorkers};
  }
  return {};
}

inline MetaOpType meta_op_for(EditKind k) {
  switch (k) {
    case EditKind::AddWorker: return MetaOpType::AddWorker;
    case EditKind::RemoveWorker: return MetaOpType::RemoveWorker;
    case EditKind::SwapWorkers: return MetaOpType::Other;
    default: return MetaOpType::ModifyPath;
  }
}

namespace detail {

struct Trial {
  Edit edit;
  Solution after;
  Assessment assessment;
};

inline std::optional<Trial> try_edit(const Solution& cur, const Workspace& ws, const Edit& e) {
  try {
    Solution after = apply_edit(cur, e);
    Assessment a = assess(after, ws);
    return Trial{e, std::move(after), std::move(a)};
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

/// Whether the disturbance lets the solver make this non-repair edit.
inline bool in_scope(const Edit& e, const Workspace& ws, const Assessment& now, const SolverOptions& opt) {
  switch (ws.scope) {
    case SolverScope::Open:
    case SolverScope::Priority: return true;
    case SolverScope::Growth:
      return e.kind == EditKind::AddWorker || e.kind == EditKind::RerouteSegment || e.kind == EditKind::InsertWaypoint;
    case SolverScope::NewWorkers: {
      const auto w = e.written();
      return (e.kind == EditKind::AddWorker || e.kind == EditKind::SwapWorkers) && w && ws.fresh.count(*w);
    }
    case SolverScope::Restrictive: return e.kind == EditKind::AddWorker && now.objective < opt.baseline_objective;
  }
  return false;
}

inline ImprovementKinds kinds_for(const Workspace& ws, const Assessment& now, const SolverOptions& opt) {
  switch (ws.scope) {
    case SolverScope::Open:
    case SolverScope::Priority: return {true, true, true, true, true};
    case SolverScope::Growth: return {true, false, false, true, true};
    case SolverScope::NewWorkers: return {true, false, true, false, false};
    case SolverScope::Restrictive: {
      const bool below = now.objective < opt.baseline_objective;
      return {below, false, false, false, false};
    }
  }
  return {};
}

inline bool improves(const Assessment& then, const Assessment& now) {
  return then.health.no_worse_than(now.health) && then.score > now.score + 1e-9;
}

inline std::string verdict(const Assessment& now, const Assessment& then) {
  return fmt::format("violations {} -> {}, J {:.4f} -> {:.4f}", now.health.violations, then.health.violations,
                     now.objective, then.objective);
}

/// Add a worker beyond the budget when dropping some other worker afterwards
/// leaves a feasible solution with a higher score.
inline std::optional<Trial> find_excursion(const Solution& cur, const Workspace& ws, const Assessment& now,
                                           std::string& plan) {
  double most = 0.0;
  for (const auto& [id, path] : cur.assignments) {
    if (const Worker* w = ws.worker(id)) most = std::max(most, path_cost(path, *w));
  }
  const double slack = std::max(0.0, ws.effective.budget - now.cost);
  CoverageState state = coverage_without(cur, ws, std::nullopt);
  std::optional<Trial> best;
  double best_score = now.score + 1e-9;
  for (const Worker& w : ws.problem.workers) {
    if (cur.contains(w.id)) continue;
    auto route = fresh_route(w, ws, state, slack + most);
    if (!route || !path_ok(route->path, w, ws)) continue;
    const Edit add{EditKind::AddWorker, {w.id}, {}, route->path, {}};
    Solution added = apply_edit(cur, add);
    for (const auto& [out, _] : cur.assignments) {
      Solution after = added;
      after.assignments.erase(out);
      const Assessment a = assess(after, ws);
      if (!a.health.clean() || a.score <= best_score) continue;
      best_score = a.score;
      Edit e = add;
      e.reason = fmt::format("over-budget excursion: recruit worker {} now and drop worker {} next (J {:.4f} -> {:.4f})",
                             to_string(w.id), to_string(out), now.objective, a.objective);
      plan = e.reason;
      best = Trial{e, added, assess(added, ws)};
    }
  }
  return best;
}

/// Two edits that only pay off together: free budget by dropping or shortening a
/// worker, then spend it on a recruit or a longer route. Both intermediate
/// solutions must be valid.
/// Edits that free budget: drop a worker or shorten its route by up to three steps.
inline std::vector<Edit> release_edits(const Solution& cur, const Workspace& ws) {
  std::vector<Edit> releases;
  for (const auto& [id, path] : cur.assignments) {
    const Worker* w = ws.worker(id);
    if (w == nullptr) continue;
    releases.push_back({EditKind::RemoveWorker, {id}, {}, std::nullopt,
                        fmt::format("release worker {}'s budget", to_string(id))});
    const double own = path_cost(path, *w);
    CoverageState others = coverage_without(cur, ws, id);
    for (int cut = 1; cut <= 3; ++cut) {
      const double left = own - cut * w->reward_per_step;
      if (left < w->reward_per_step) break;
      auto choice = fresh_route(*w, ws, others, left);
      if (choice && choice->path != path && path_ok(choice->path, *w, ws)) {
        releases.push_back({EditKind::RerouteSegment, {id}, new_cells(path, choice->path), choice->path,
                            fmt::format("shorten worker {} to free budget", to_string(id))});
      }
    }
  }
  return releases;
}

inline std::optional<std::pair<Trial, Trial>> find_trade(const Solution& cur, const Workspace& ws,
                                                         const Assessment& now, const SolverOptions& opt) {
  const std::vector<Edit> releases = release_edits(cur, ws);
  std::optional<std::pair<Trial, Trial>> best;
  double best_score = now.score + 1e-9;
  const ImprovementKinds spend{true, false, false, true, false};
  for (const Edit& r : releases) {
    auto first = try_edit(cur, ws, r);
    if (!first || !first->assessment.health.no_worse_than(now.health)) continue;
    for (const Edit& f : improvement_edits(first->after, ws, spend)) {
      if (!in_scope(f, ws, first->assessment, opt)) continue;
      if (f.kind == EditKind::AddWorker && r.kind == EditKind::RemoveWorker && f.targets[0] == r.targets[0]) continue;
      auto second = try_edit(first->after, ws, f);
      if (!second || !second->assessment.health.no_worse_than(now.health)) continue;
      if (second->assessment.score > best_score) {
        best_score = second->assessment.score;
        best = std::pair{*first, std::move(*second)};
      }
    }
  }
  return best;
}

/// A repair that needs budget first: release, then repair, judged on the
/// health (then score) of the pair.
inline std::optional<std::pair<Trial, Trial>> find_funded_repair(const Solution& cur, const Workspace& ws,
                                                                 const Assessment& now) {
  std::optional<std::pair<Trial, Trial>> best;
  for (const Edit& r : release_edits(cur, ws)) {
    auto first = try_edit(cur, ws, r);
    if (!first || !first->assessment.health.no_worse_than(now.health)) continue;
    for (const Edit& f : repair_edits(first->after, ws)) {
      auto second = try_edit(first->after, ws, f);
      if (!second || !second->assessment.health.better_than(now.health)) continue;
      const Assessment& a = second->assessment;
      if (!best || a.health.better_than(best->second.assessment.health) ||
          (!best->second.assessment.health.better_than(a.health) && a.score > best->second.assessment.score + 1e-12)) {
        best = std::pair{*first, std::move(*second)};
      }
    }
  }
  return best;
}

}  // namespace detail

/// One edit-and-verify step. Candidates are tried in tiers: repairs of current
/// violations, then the Eval agent's suggestions, then edits of the kinds that
/// retrieved memory entries found helpful, then the best-scoring improvement.
/// Each edit is re-validated against the disturbed instance before it is kept.
inline SolverStep solver_step(const Solution& current, const Workspace& ws, const EvalReport* feedback,
                              const std::vector<MetaOperation>& retrieved, const SolverOptions& opt = {}) {
  SolverStep out;
  out.solution = current;
  std::vector<std::string> lines;
  Assessment now = assess(out.solution, ws);

  for (int round = 0; round < opt.batch_max; ++round) {
    std::optional<detail::Trial> pick;
    std::string tier;

    // Tier 0: repairs, best resulting health first.
    if (!now.health.clean()) {
      std::vector<detail::Trial> repairs;
      for (const Edit& e : repair_edits(out.solution, ws)) {
        if (auto t = detail::try_edit(out.solution, ws, e)) repairs.push_back(std::move(*t));
      }
      std::stable_sort(repairs.begin(), repairs.end(), [](const detail::Trial& a, const detail::Trial& b) {
        if (a.assessment.health.better_than(b.assessment.health)) return true;
        if (b.assessment.health.better_than(a.assessment.health)) return false;
        return a.assessment.score > b.assessment.score;
      });
      for (detail::Trial& t : repairs) {
        if (t.assessment.health.better_than(now.health)) {
          pick = std::move(t);
          tier = "repair";
          break;
        }
        if (out.rejected.size() < 8) {
          out.rejected.push_back(fmt::format("{}: does not reduce violations", t.edit.describe()));
        }
      }
    }

    if (!pick && !now.health.clean() && static_cast<int>(out.edits.size()) + 2 <= opt.batch_max) {
      if (auto pair = detail::find_funded_repair(out.solution, ws, now)) {
        auto& [first, second] = *pair;
        lines.push_back(fmt::format("{}. {} [funded repair]: {}; {}", out.edits.size() + 1, first.edit.describe(),
                                    first.edit.reason, detail::verdict(now, first.assessment)));
        lines.push_back(fmt::format("{}. {} [funded repair]: {}; {}", out.edits.size() + 2, second.edit.describe(),
                                    second.edit.reason, detail::verdict(first.assessment, second.assessment)));
        out.edits.push_back(first.edit);
        out.edits.push_back(second.edit);
        out.solution = std::move(second.after);
        now = std::move(second.assessment);
        continue;
      }
    }

    // Tier 1: the Eval agent's ranked suggestions (only against the solution they were made for).
    if (!pick && feedback != nullptr && round == 0) {
      for (const Suggestion& s : feedback->suggestions) {
        auto t = detail::try_edit(out.solution, ws, s.edit);
        if (!t) continue;
        const bool repair = t->assessment.health.better_than(now.health);
        if (repair || (detail::improves(t->assessment, now) && detail::in_scope(s.edit, ws, now, opt))) {
          pick = std::move(t);
          tier = "feedback";
          break;
        }
        if (out.rejected.size() < 8) {
          out.rejected.push_back(fmt::format("{}: {}", s.edit.describe(), detail::verdict(now, t->assessment)));
        }
      }
    }

    // Tiers 2 and 3: improvements, memory-preferred kinds first.
    if (!pick) {
      std::vector<detail::Trial> trials;
      for (const Edit& e : improvement_edits(out.solution, ws, detail::kinds_for(ws, now, opt))) {
        if (!detail::in_scope(e, ws, now, opt)) continue;
        auto t = detail::try_edit(out.solution, ws, e);
        if (t && detail::improves(t->assessment, now)) trials.push_back(std::move(*t));
      }
      std::stable_sort(trials.begin(), trials.end(), [](const detail::Trial& a, const detail::Trial& b) {
        return a.assessment.score > b.assessment.score;
      });
      for (const MetaOperation& m : retrieved) {
        if (pick || m.impact <= 0.0) continue;
        const auto kinds = edit_kinds_for(m.op_type);
        for (detail::Trial& t : trials) {
          if (std::find(kinds.begin(), kinds.end(), t.edit.kind) != kinds.end()) {
            pick = std::move(t);
            tier = fmt::format("memory ({})", to_string(m.op_type));
            break;
          }
        }
      }
      if (!pick && !trials.empty()) {
        pick = std::move(trials.front());
        tier = "best gain";
      }
    }

    if (!pick && ws.scope != SolverScope::Restrictive && static_cast<int>(out.edits.size()) + 2 <= opt.batch_max &&
        now.health.clean()) {
      if (auto trade = detail::find_trade(out.solution, ws, now, opt)) {
        auto& [first, second] = *trade;
        lines.push_back(fmt::format("{}. {} [trade]: {}; {}", out.edits.size() + 1, first.edit.describe(),
                                    first.edit.reason, detail::verdict(now, first.assessment)));
        lines.push_back(fmt::format("{}. {} [trade]: {}; {}", out.edits.size() + 2, second.edit.describe(),
                                    second.edit.reason, detail::verdict(first.assessment, second.assessment)));
        out.edits.push_back(first.edit);
        out.edits.push_back(second.edit);
        out.solution = std::move(second.after);
        now = std::move(second.assessment);
        continue;
      }
    }

    if (!pick) {
      if (round == 0 && opt.allow_excursions && ws.scope == SolverScope::Restrictive && now.health.clean() &&
          now.objective < opt.baseline_objective) {
        std::string plan;
        if (auto t = detail::find_excursion(out.solution, ws, now, plan)) {
          lines.push_back(fmt::format("{}. {} [excursion]: {}; {}", out.edits.size() + 1, t->edit.describe(), plan,
                                      detail::verdict(now, t->assessment)));
          out.edits.push_back(t->edit);
          out.solution = std::move(t->after);
          out.excursion = true;
        }
      }
      break;
    }
    lines.push_back(fmt::format("{}. {} [{}]: {}; {}", out.edits.size() + 1, pick->edit.describe(), tier,
                                pick->edit.reason, detail::verdict(now, pick->assessment)));
    out.edits.push_back(pick->edit);
    out.solution = std::move(pick->after);
    now = std::move(pick->assessment);
  }

  if (out.edits.empty()) {
    out.explanation = "no-op: no applicable edit";
  } else {
    out.explanation = fmt::format("{}", fmt::join(lines, "\n"));
  }
  return out;
}

/// Per-worker edits turning `from` into `to`; used to replay externally proposed solutions.
inline std::vector<Edit> edits_between(const Solution& from, const Solution& to) {
  std::vector<Edit> out;
  for (const auto& [id, path] : from.assignments) {
    if (!to.contains(id)) out.push_back({EditKind::RemoveWorker, {id}, {}, std::nullopt, "dropped by proposal"});
  }
  for (const auto& [id, path] : to.assignments) {
    auto it = from.assignments.find(id);
    if (path.empty()) continue;
    if (it == from.assignments.end()) {
      out.push_back({EditKind::AddWorker, {id}, {}, path, "added by proposal"});
    } else if (it->second != path) {
      out.push_back({EditKind::RerouteSegment, {id}, detail::new_cells(it->second, path), path, "rerouted by proposal"});
    }
  }
  return out;
}

}  // namespace crowdsense
