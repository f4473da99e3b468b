#pragma once

#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/io.hpp"
#include "crowdsense/gateway/chat.hpp"

namespace crowdsense {

/// Compact solution listing, cut after `max_chars` with a note saying how much was left out.
inline std::string solution_listing(const Solution& s, std::size_t max_chars, std::size_t* shown_out = nullptr) {
  std::string out = "{";
  std::size_t shown = 0;
  for (const auto& [id, path] : s.assignments) {
    std::string entry = fmt::format("{}\"{}\": {}", shown ? ", " : "", to_string(id), to_json(path).dump());
    if (shown > 0 && out.size() + entry.size() > max_chars) break;
    out += entry;
    ++shown;
  }
  out += "}";
  if (shown_out) *shown_out = shown;
  if (shown < s.size()) {
    out += fmt::format("\n[listing truncated: {} of {} workers omitted; keep omitted workers unchanged]",
                       s.size() - shown, s.size());
  }
  return out;
}

inline std::string worker_listing(const std::vector<Worker>& workers, const std::set<WorkerId>& recruited) {
  std::string out;
  for (const Worker& w : workers) {
    out += fmt::format("- worker {}: origin ({}, {}), destination ({}, {}), slots {}..{}, speed {:g}, cost per step {:g}{}\n",
                       to_string(w.id), w.origin.x, w.origin.y, w.destination.x, w.destination.y, w.t_start, w.t_end,
                       w.speed, w.reward_per_step, recruited.count(w.id) ? " (recruited)" : "");
  }
  return out;
}

inline std::string task_settings(const Workspace& ws) {
  const GridSpec& g = ws.effective.grid;
  return fmt::format("Grid: {} columns (x) by {} rows (y), time slots 0..{}. Total budget: {:g}. "
                     "Objective weight alpha: {:g} (objective = alpha * hierarchical entropy + (1 - alpha) * log2 "
                     "of covered cells).",
                     g.width, g.height, g.num_slots - 1, ws.effective.budget, ws.effective.alpha);
}

inline std::string instruction_text(const DisturbedInstance& d) {
  if (d.active.empty()) return "continue optimize";
  std::string out;
  for (const DisturbanceInstruction& i : d.active) {
    out += (out.empty() ? "" : "; ") + (i.description.empty() ? std::string(to_string(i.type)) : i.description);
  }
  return out;
}

inline const std::string& solver_system_prompt() {
  static const std::string text = R"(You plan routes for participatory urban sensing. Each recruited worker walks a trajectory over grid cells and time slots, and every distinct (x, y, t) cell visited counts as sensed data. Your job: take the current plan and return an improved plan that follows the instruction while staying feasible.

Rules a plan must obey:
* a worker starts at its origin at its first slot and is at its destination at its last slot, inside its availability window;
* one step per slot, each step moves to a 4-neighbour cell (up, down, left, right) or stays put; slow workers may only change cell every few slots;
* the summed cost of all recruited workers stays within the budget.

You may call the tool validate_worker_paths before answering by replying with only
{"tool": "validate_worker_paths", "arguments": {"worker_paths": {...}}}
and you will receive the validation result.

Answer with one JSON object holding exactly these fields:
{"think_process": "<your reasoning, at most 200 words>", "refined_solution": {"<worker_id>": [[x, y, t], ...], ...}}
List every worker you want recruited in refined_solution; workers left out are dropped.)";
  return text;
}

inline const std::string& eval_system_prompt() {
  static const std::string text = R"(You review routing plans for participatory urban sensing. You receive a baseline plan, a candidate plan, their measured metrics, the disturbance-handling checks and a coverage comparison per region. Judge the candidate against the baseline and say concretely what to change next (which worker, which region, which kind of edit).

Tools available (reply with only {"tool": "<name>", "arguments": {}} to call one): check_disturbance_handling, compute_objective, compute_cost, visual_analysis.

Answer with one JSON object holding exactly these fields:
{"eval_summary": "<short verdict on the candidate>", "advice": "<specific next edits>"})";
  return text;
}

inline const std::string& memory_system_prompt() {
  static const std::string text = R"(You keep the experience log for a routing system in participatory urban sensing. Compare a baseline plan with a refined plan, find what changed, decide which single change mattered most given the metric movement, and record it as a reusable operation.

Allowed operation_type values: add_worker, remove_worker, modify_path, other.

Answer with one JSON object holding exactly these fields:
{"operation_type": "<one of the allowed values>", "operation_details": "<what changed and what it did to the metrics>"})";
  return text;
}

inline json solver_tool_schemas() {
  return json::array({{{"type", "function"},
                       {"function",
                        {{"name", "validate_worker_paths"},
                         {"description", "Check trajectories against windows, moves, speed, blocks and budget."},
                         {"parameters",
                          {{"type", "object"},
                           {"properties", {{"worker_paths", {{"type", "object"}}}}},
                           {"required", {"worker_paths"}}}}}}}});
}

inline json eval_tool_schemas() {
  json out = json::array();
  for (const char* name : {"check_disturbance_handling", "compute_objective", "compute_cost", "visual_analysis"}) {
    out.push_back({{"type", "function"},
                   {"function", {{"name", name}, {"parameters", {{"type", "object"}, {"properties", json::object()}}}}}});
  }
  return out;
}

inline std::string metrics_line(const Metrics& m) {
  return fmt::format("covered_count {}, entropy {:.4f}, objective_value {:.4f}, cost {:g}", m.covered_count, m.entropy,
                     m.objective_value, m.cost);
}

inline std::string solver_user_prompt(const SolverRequest& req, std::size_t max_listing) {
  std::set<WorkerId> recruited;
  for (const auto& [id, _] : req.current.assignments) recruited.insert(id);
  std::string out = "Task settings:\n" + task_settings(req.ws) + "\n\nWorkers:\n" +
                    worker_listing(req.ws.effective.workers, recruited) + "\nBaseline plan:\n" +
                    solution_listing(req.baseline, max_listing) + "\n\nCurrent plan:\n" +
                    solution_listing(req.current, max_listing) + "\n\nInstruction: " +
                    instruction_text(*req.ws.disturbed) + "\n";
  if (req.feedback) {
    out += "\nReviewer summary: " + req.feedback->summary + "\n";
    if (!req.feedback->advice.empty()) out += "Reviewer advice: " + req.feedback->advice + "\n";
    for (std::size_t i = 0; i < req.feedback->suggestions.size() && i < 5; ++i) {
      out += fmt::format("Suggested edit {}: {} ({})\n", i + 1, req.feedback->suggestions[i].edit.describe(),
                         req.feedback->suggestions[i].rationale);
    }
  }
  for (const MetaOperation& m : req.retrieved) {
    out += fmt::format("Past operation under {}: {} ({}, impact {:.4f})\n", to_string(m.context.disturbance), m.details,
                       to_string(m.op_type), m.impact);
  }
  return out;
}

inline std::string eval_user_prompt(const EvalReport& r, const Solution& baseline, const Solution& candidate,
                                    std::size_t max_listing) {
  std::string out = "Baseline plan:\n" + solution_listing(baseline, max_listing) + "\n\nCandidate plan:\n" +
                    solution_listing(candidate, max_listing) + "\n\nBaseline metrics: " +
                    metrics_line(r.baseline_metrics) + "\nCandidate metrics: " + metrics_line(r.metrics) +
                    "\nMeasured summary: " + r.summary + "\n";
  for (const Region& g : r.low_regions) {
    out += fmt::format("Low coverage: {} region (x {}..{}, y {}..{}) has {} visits, change {:+d}\n", g.name, g.x0, g.x1,
                       g.y0, g.y1, g.visits, g.change);
  }
  return out;
}

inline std::string memory_user_prompt(const Solution& s0, const Solution& st, const Metrics& m0, const Metrics& mt,
                                      const MetaContext& ctx, std::size_t max_listing) {
  return "Baseline plan:\n" + solution_listing(s0, max_listing) + "\n\nRefined plan:\n" +
         solution_listing(st, max_listing) + "\n\nBaseline metrics: " + metrics_line(m0) +
         "\nRefined metrics: " + metrics_line(mt) + fmt::format("\nDisturbance: {}; budget {:g}\n",
                                                                 to_string(ctx.disturbance), ctx.budget);
}

/// Runs the local tool a model asked for and returns the reply it will see.
inline json run_tool(const std::string& name, const json& args, const Solution& candidate, const Solution& baseline,
                     const Workspace& ws) {
  if (name == "validate_worker_paths") {
    Solution s = candidate;
    if (args.contains("worker_paths")) {
      try {
        s = solution_from_json(args["worker_paths"]);
      } catch (const FormatError& e) {
        return {{"error", e.what()}};
      }
    }
    const Assessment a = assess(s, ws);
    return {{"overall_feasible", a.feasible()}, {"validation_results", to_json(a.validation)},
            {"handling", to_json(a.handling)}};
  }
  const Assessment a = assess(candidate, ws);
  if (name == "check_disturbance_handling") return to_json(a.handling);
  if (name == "compute_objective") return {{"objective_value", finite_or_tag(a.objective)}};
  if (name == "compute_cost") return {{"cost", a.cost}, {"budget", ws.effective.budget}};
  if (name == "visual_analysis") {
    const EvalReport r = eval_report(baseline, candidate, ws);
    json regions = json::array();
    for (const Region& g : coverage_regions(r.heatmaps)) {
      regions.push_back({{"region", g.name}, {"visits", g.visits}, {"change", g.change}});
    }
    return {{"regions", regions}};
  }
  return {{"error", "unknown tool '" + name + "'"}};
}

}  // namespace crowdsense
