#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowdsense/agents/policy.hpp"
#include "crowdsense/disturbances/apply.hpp"
#include "crowdsense/planners/config.hpp"

namespace crowdsense {

struct RefinementOptions {
  int max_iterations = 10;
  int stale_limit = 2;  // stop once successful and the best J has not moved for this many iterations
  std::size_t retrieve_k = 3;
  SolverOptions solver;
  MemoryStore* memory = nullptr;  // shared store; a private one is used when null
};

struct IterationRecord {
  int iter = 0;
  Solution solution;
  Metrics metrics;
  HandlingReport handling;
  ValidationResult validation;
  std::vector<Edit> edits;
  std::vector<std::string> rejected;
  std::string explanation;
  bool feasible = false;
  bool success = false;
  bool excursion = false;
  std::vector<std::string> tags;  // "fallback:<agent>", ...
  TokenUsage tokens;              // cumulative up to and including this iteration
  std::string eval_summary;
  std::string advice;
  std::vector<Suggestion> suggestions;
  std::optional<MetaOperation> meta;
  std::vector<MetaOperation> retrieved;
  Heatmaps heatmaps;
};

struct RefinementTrace {
  DisturbanceInstruction instruction;
  Solution baseline;
  Metrics baseline_metrics;
  std::vector<IterationRecord> iterations;
  Solution final;
  Metrics final_metrics;
  bool success = false;
  int iterations_used = 0;  // iteration that produced `final` (0 = baseline kept)
  TokenUsage tokens;
};

/// Success of one iterate: valid under the disturbed instance with every
/// disturbance handled; continue_optimize also needs J above the baseline.
inline bool iterate_succeeds(const Assessment& a, const DisturbanceInstruction& instr, double baseline_objective) {
  if (!a.feasible()) return false;
  if (instr.type == DisturbanceType::ContinueOptimize) return a.objective > baseline_objective + 1e-12;
  return true;
}

/// Instance that prices every worker either solution can mention.
inline Instance pricing_instance(const DisturbedInstance& d) {
  Instance inst = d.base;
  for (const Worker& w : d.added) inst.workers.push_back(w);
  inst.budget = d.effective_budget;
  return inst;
}

inline MemoryQuery memory_query(const EvalReport* feedback, const DisturbanceInstruction& instr, const GridSpec& grid) {
  MemoryQuery q;
  q.disturbance = instr.type;
  if (feedback == nullptr) return q;
  for (const Suggestion& s : feedback->suggestions) {
    const MetaOpType op = meta_op_for(s.edit.kind);
    if (std::find(q.candidates.begin(), q.candidates.end(), op) == q.candidates.end()) q.candidates.push_back(op);
    if (q.candidates.size() == 3) break;
  }
  if (!feedback->suggestions.empty() && feedback->suggestions.front().edit.path) {
    const Path& p = *feedback->suggestions.front().edit.path;
    double sx = 0.0, sy = 0.0;
    for (const Step& s : p.steps) {
      sx += s.x;
      sy += s.y;
    }
    const double n = static_cast<double>(p.size());
    q.centroid_x = grid.width > 1 ? sx / n / (grid.width - 1) : 0.5;
    q.centroid_y = grid.height > 1 ? sy / n / (grid.height - 1) : 0.5;
  }
  return q;
}

/// Applies `instruction` to `instance` and refines `baseline` with the
/// solver -> eval -> memory loop. Deterministic policies make it reproducible.
inline RefinementTrace run_refinement(const Instance& instance, const PlanResult& baseline,
                                      const DisturbanceInstruction& instruction, Policies policies,
                                      const RefinementOptions& options = {}) {
  if (!policies.solver || !policies.eval || !policies.memory) {
    const Policies fallback = deterministic_policies();
    if (!policies.solver) policies.solver = fallback.solver;
    if (!policies.eval) policies.eval = fallback.eval;
    if (!policies.memory) policies.memory = fallback.memory;
  }
  RefinementTrace trace;
  trace.instruction = instruction;
  trace.baseline = baseline.solution;
  trace.baseline_metrics = compute_metrics(baseline.solution, instance);

  DisturbedInstance disturbed = apply_disturbance(instance, instruction);
  if (!disturbed.priority_cells.empty()) {
    disturbed.baseline_priority_count = priority_visits(baseline.solution, disturbed.priority_cells);
  }
  const Workspace ws(disturbed, collect_coverage(baseline.solution, instance.grid).quantity());
  const Instance pricing = pricing_instance(disturbed);
  const double j_base = trace.baseline_metrics.objective_value;

  MemoryStore local;
  MemoryStore& memory = options.memory ? *options.memory : local;
  SolverOptions solver_opt = options.solver;
  solver_opt.baseline_objective = j_base;
  const Metrics m0 = compute_metrics(baseline.solution, pricing);

  Solution current = baseline.solution;
  PolicyInfo eval_info;
  EvalReport feedback = policies.eval->evaluate(baseline.solution, current, ws, eval_info);
  trace.tokens += eval_info.usage;
  std::vector<MetaOperation> retrieved;
  if (memory.size() > 0) retrieved = memory.retrieve(memory_query(&feedback, instruction, instance.grid), options.retrieve_k);

  std::optional<double> best_j;
  int stale = 0;
  for (int it = 1; it <= std::max(options.max_iterations, 0); ++it) {
    IterationRecord rec;
    rec.iter = it;
    rec.retrieved = retrieved;

    PolicyInfo solver_info;
    const SolverRequest req{baseline.solution, current, ws, &feedback, retrieved, solver_opt, it};
    SolverStep step = policies.solver->step(req, solver_info);
    if (solver_info.fallback) rec.tags.push_back("fallback:solver");
    trace.tokens += solver_info.usage;
    current = step.solution;
    rec.edits = std::move(step.edits);
    rec.rejected = std::move(step.rejected);
    rec.explanation = std::move(step.explanation);
    rec.excursion = step.excursion;

    PolicyInfo info;
    feedback = policies.eval->evaluate(baseline.solution, current, ws, info);
    if (info.fallback) rec.tags.push_back("fallback:eval");
    trace.tokens += info.usage;

    const Assessment a = assess(current, ws);
    rec.solution = current;
    rec.metrics = feedback.metrics;
    rec.handling = a.handling;
    rec.validation = a.validation;
    rec.feasible = a.feasible();
    rec.success = iterate_succeeds(a, instruction, j_base);
    rec.eval_summary = feedback.summary;
    rec.advice = feedback.advice;
    rec.suggestions = feedback.suggestions;
    rec.heatmaps = feedback.heatmaps;

    MetaContext ctx{instruction.type, disturbed.effective_budget, 0.5, 0.5};
    PolicyInfo mem_info;
    const Metrics mt = compute_metrics(current, pricing);
    MetaOperation meta = policies.memory->extract(baseline.solution, current, m0, mt, ctx, pricing, mem_info);
    if (mem_info.fallback) rec.tags.push_back("fallback:memory");
    trace.tokens += mem_info.usage;
    if (meta.op_type != MetaOpType::Other || meta.impact != 0.0) memory.append(meta);
    rec.meta = meta;
    retrieved = memory.retrieve(memory_query(&feedback, instruction, instance.grid), options.retrieve_k);
    rec.tokens = trace.tokens;

    bool improved = false;
    if (rec.success && (!best_j || a.score > *best_j + 1e-12)) {
      best_j = a.score;
      trace.final = current;
      trace.iterations_used = it;
      trace.success = true;
      improved = true;
    }
    trace.iterations.push_back(std::move(rec));
    if (trace.success) {
      stale = improved ? 0 : stale + 1;
      if (stale >= options.stale_limit) break;
    }
  }
  if (!trace.success) {
    trace.final = current;
    trace.iterations_used = static_cast<int>(trace.iterations.size());
  }
  trace.final_metrics = compute_metrics(trace.final, pricing);
  return trace;
}

}  // namespace crowdsense
