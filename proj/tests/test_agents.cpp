#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "crowdsense/agents/io.hpp"
#include "crowdsense/agents/refinement.hpp"
#include "crowdsense/harness/disturb.hpp"
#include "crowdsense/harness/generate.hpp"
#include "crowdsense/planners/plan.hpp"
#include "oracles.hpp"

using namespace crowdsense;

namespace {

Worker make_worker(std::uint32_t id, Cell o, Cell d, int t0, int t1) {
  Worker w;
  w.id = WorkerId{id};
  w.origin = o;
  w.destination = d;
  w.t_start = t0;
  w.t_end = t1;
  return w;
}

const ScaleConfig& small() {
  static const ScaleConfig s = scale_config(Dataset::TDrive, ScaleName::Small);
  return s;
}

struct Scenario {
  Instance inst;
  PlanResult base;
  DisturbanceInstruction instr;
};

Scenario scenario(Algorithm a, DisturbanceType t, std::uint64_t seed) {
  Scenario s;
  s.inst = generate_instance(small(), seed);
  s.base = plan(s.inst, {a, seed});
  s.instr = make_disturbance(t, s.inst, s.base.solution, seed);
  return s;
}

RefinementTrace refine(const Scenario& s) { return run_refinement(s.inst, s.base, s.instr, deterministic_policies()); }

MetaOperation entry(MetaOpType op, DisturbanceType d, std::string details) {
  MetaOperation m;
  m.op_type = op;
  m.details = std::move(details);
  m.context.disturbance = d;
  m.metric_gap = {1.0, 0.1, 0.1, 0.0};
  m.impact = 0.5;
  return m;
}

}  // namespace

TEST(EvalReport, IdenticalCandidateHasZeroDelta) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::ContinueOptimize, 0);
  const DisturbedInstance d = apply_disturbance(s.inst, s.instr);
  const EvalReport r = eval_report(s.base.solution, s.base.solution, d);
  EXPECT_EQ(r.delta.d_covered, 0.0);
  EXPECT_EQ(r.delta.d_entropy, 0.0);
  EXPECT_EQ(r.delta.d_objective, 0.0);
  EXPECT_EQ(r.delta.d_cost, 0.0);
  for (const auto& slot : r.heatmaps.diff)
    for (const auto& row : slot)
      for (long v : row) EXPECT_EQ(v, 0);
}

TEST(EvalReport, AddedWorkerCostIsItsPathCost) {
  Instance inst;
  inst.grid = {4, 4, 4};
  inst.workers = {make_worker(0, {0, 0}, {2, 0}, 0, 2), make_worker(1, {3, 3}, {3, 1}, 0, 3)};
  inst.workers[1].reward_per_step = 1.5;
  inst.budget = 20;
  Solution base, cand;
  base.assignments[WorkerId{0}] = Path{{{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}};
  cand = base;
  cand.assignments[WorkerId{1}] = Path{{{3, 3, 0}, {3, 2, 1}, {3, 1, 2}, {3, 1, 3}}};
  DisturbanceInstruction none;
  const EvalReport r = eval_report(base, cand, apply_disturbance(inst, none));
  EXPECT_DOUBLE_EQ(r.delta.d_cost, 4 * 1.5);
}

TEST(EvalReport, BlockedCrossingRanksRerouteFirst) {
  Instance inst;
  inst.grid = {8, 8, 8};
  inst.workers = {make_worker(0, {2, 4}, {6, 4}, 0, 7), make_worker(1, {0, 0}, {1, 1}, 0, 3)};
  inst.budget = 20;
  Solution s;
  s.assignments[WorkerId{0}] = Path{{{2, 4, 0}, {3, 4, 1}, {4, 4, 2}, {5, 4, 3}, {6, 4, 4}}};
  s.assignments[WorkerId{1}] = Path{{{0, 0, 0}, {1, 0, 1}, {1, 1, 2}}};
  DisturbanceInstruction block;
  block.type = DisturbanceType::AreaBlocked;
  block.areas = {{{4, 4}, 0, 7}};
  const EvalReport r = eval_report(s, s, apply_disturbance(inst, block));
  EXPECT_FALSE(r.handling.all_satisfied);
  ASSERT_FALSE(r.suggestions.empty());
  const Edit& top = r.suggestions.front().edit;
  EXPECT_EQ(top.kind, EditKind::RerouteSegment);
  EXPECT_EQ(top.targets.front(), WorkerId{0});
  ASSERT_TRUE(top.path.has_value());
  EXPECT_FALSE(top.path->visits({4, 4}));
}

TEST(MetaOperation, AddedWorkerRecovered) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::BudgetChange, 1);
  Solution s0 = s.base.solution;
  const auto it = s0.assignments.begin();
  const WorkerId added = it->first;
  const Solution st = s0;
  s0.assignments.erase(it);
  Instance pricing = s.inst;
  pricing.budget = 1e9;
  const MetaOperation m = extract_meta_operation(s0, st, compute_metrics(s0, pricing), compute_metrics(st, pricing),
                                                 {}, pricing);
  EXPECT_EQ(m.op_type, MetaOpType::AddWorker);
  EXPECT_NE(m.details.find(to_string(added)), std::string::npos);
}

TEST(MetaOperation, IdenticalSolutionsAreOther) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::ContinueOptimize, 1);
  const Metrics m0 = compute_metrics(s.base.solution, s.inst);
  const MetaOperation m = extract_meta_operation(s.base.solution, s.base.solution, m0, m0, {}, s.inst);
  EXPECT_EQ(m.op_type, MetaOpType::Other);
  EXPECT_EQ(m.impact, 0.0);
}

TEST(MetaOperation, RerouteImpactMatchesWeights) {
  Instance inst;
  inst.grid = {4, 4, 4};
  inst.workers = {make_worker(0, {0, 0}, {0, 0}, 0, 3), make_worker(1, {0, 0}, {0, 0}, 0, 3)};
  inst.budget = 20;
  Solution s0;
  s0.assignments[WorkerId{0}] = Path{{{0, 0, 0}, {0, 0, 1}, {0, 0, 2}, {0, 0, 3}}};
  s0.assignments[WorkerId{1}] = s0.assignments[WorkerId{0}];
  Solution st = s0;
  st.assignments[WorkerId{0}] = Path{{{0, 0, 0}, {1, 0, 1}, {1, 0, 2}, {0, 0, 3}}};

  const double j0 = oracle::objective(s0, inst.grid, 0.5);
  const double jt = oracle::objective(st, inst.grid, 0.5);
  ASSERT_GT(jt, j0);
  const MetaOperation m =
      extract_meta_operation(s0, st, compute_metrics(s0, inst), compute_metrics(st, inst), {}, inst);
  EXPECT_EQ(m.op_type, MetaOpType::ModifyPath);
  EXPECT_GT(m.impact, 0.0);

  // Independent recomputation: 4 -> 6 distinct cells, equal cost, oracle entropy and J.
  std::vector<Step> steps0, stepst;
  for (const auto& [id, p] : s0.assignments) steps0.insert(steps0.end(), p.steps.begin(), p.steps.end());
  for (const auto& [id, p] : st.assignments) stepst.insert(stepst.end(), p.steps.begin(), p.steps.end());
  const int levels = oracle::levels_for(inst.grid);
  const double e0 = oracle::hierarchical_entropy(steps0, levels, true);
  const double et = oracle::hierarchical_entropy(stepst, levels, true);
  const ImpactWeights w;
  const double want = w.covered * (6.0 - 4.0) / 4.0 + w.entropy * (et - e0) / std::max(1.0, e0) +
                      w.objective * (jt - j0) / std::max(1.0, std::abs(j0));
  EXPECT_NEAR(m.impact, want, 1e-9);
}

TEST(MetaOperation, LeaveOneOutPicksLargerContribution) {
  Instance inst;
  inst.grid = {4, 4, 4};
  inst.workers = {make_worker(1, {0, 0}, {0, 0}, 0, 3), make_worker(2, {0, 1}, {0, 1}, 0, 3),
                  make_worker(3, {3, 3}, {0, 3}, 0, 3)};
  inst.budget = 30;
  Solution s0;
  s0.assignments[WorkerId{1}] = Path{{{0, 0, 0}, {0, 0, 1}, {0, 0, 2}, {0, 0, 3}}};
  s0.assignments[WorkerId{2}] = Path{{{0, 1, 0}, {0, 1, 1}, {0, 1, 2}, {0, 1, 3}}};
  Solution st = s0;
  st.assignments[WorkerId{1}] = Path{{{0, 0, 0}, {1, 0, 1}, {1, 0, 2}, {0, 0, 3}}};
  st.assignments[WorkerId{3}] = Path{{{3, 3, 0}, {2, 3, 1}, {1, 3, 2}, {0, 3, 3}}};

  // Leave-one-out oracle: each edit alone on s0.
  Solution only_add = s0, only_reroute = s0;
  only_add.assignments[WorkerId{3}] = st.assignments[WorkerId{3}];
  only_reroute.assignments[WorkerId{1}] = st.assignments[WorkerId{1}];
  const double j0 = oracle::objective(s0, inst.grid, 0.5);
  const double d_add = oracle::objective(only_add, inst.grid, 0.5) - j0;
  const double d_reroute = oracle::objective(only_reroute, inst.grid, 0.5) - j0;
  ASSERT_GT(d_add, d_reroute);

  const MetaOperation m =
      extract_meta_operation(s0, st, compute_metrics(s0, inst), compute_metrics(st, inst), {}, inst);
  EXPECT_EQ(m.op_type, MetaOpType::AddWorker);
}

TEST(MetaOperation, SingleEditKindRecoveredEverywhere) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = scenario(Algorithm::GraphDP, DisturbanceType::ContinueOptimize, seed);
    Instance pricing = s.inst;
    pricing.budget = 1e9;
    const Solution& base = s.base.solution;
    for (const auto& [id, path] : base.assignments) {
      Solution removed = base;
      removed.assignments.erase(id);
      const Metrics mb = compute_metrics(base, pricing), mr = compute_metrics(removed, pricing);
      EXPECT_EQ(extract_meta_operation(base, removed, mb, mr, {}, pricing).op_type, MetaOpType::RemoveWorker);
      EXPECT_EQ(extract_meta_operation(removed, base, mr, mb, {}, pricing).op_type, MetaOpType::AddWorker);
      const Worker& w = *s.inst.find(id);
      const auto stay = realize_path(w, std::vector<Cell>{}, s.inst.grid, path.back().t);
      if (stay && *stay.path != path) {
        Solution rerouted = base;
        rerouted.assignments[id] = *stay.path;
        EXPECT_EQ(extract_meta_operation(base, rerouted, mb, compute_metrics(rerouted, pricing), {}, pricing).op_type,
                  MetaOpType::ModifyPath);
      }
      checked += 3;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Memory, CosineOrderOnThreeEntries) {
  MemoryStore store;
  store.append(entry(MetaOpType::AddWorker, DisturbanceType::BudgetChange, "c"));
  store.append(entry(MetaOpType::AddWorker, DisturbanceType::AreaBlocked, "b"));
  store.append(entry(MetaOpType::ModifyPath, DisturbanceType::AreaBlocked, "a"));
  MemoryQuery q;
  q.candidates = {MetaOpType::ModifyPath};
  q.disturbance = DisturbanceType::AreaBlocked;

  // By hand: |q|^2 = 1 + 1 + 0.25 + 0.25 + 3 = 5.5 and each entry has the same norm.
  // Dot products are 5.5 (same op and type), 4.5 (same type), 3.5 (neither).
  const auto all = store.entries();
  EXPECT_NEAR(similarity(q, all[2]), 1.0, 1e-12);
  EXPECT_NEAR(similarity(q, all[1]), 9.0 / 11.0, 1e-12);
  EXPECT_NEAR(similarity(q, all[0]), 7.0 / 11.0, 1e-12);

  const auto top = store.retrieve(q, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].details, "a");
  EXPECT_EQ(top[1].details, "b");
  EXPECT_EQ(top[2].details, "c");
}

TEST(Memory, SingleEntryAndOversizedK) {
  MemoryStore store;
  EXPECT_TRUE(store.retrieve(MemoryQuery{}, 3).empty());
  store.append(entry(MetaOpType::RemoveWorker, DisturbanceType::BadWeather, "only"));
  MemoryQuery q;
  q.disturbance = DisturbanceType::PriorityArea;
  ASSERT_EQ(store.retrieve(q, 5).size(), 1u);
  EXPECT_EQ(store.retrieve(q, 1)[0].details, "only");
  EXPECT_THROW(store.retrieve(q, 0), DomainError);
}

TEST(Memory, TiesBreakNewestFirst) {
  MemoryStore store;
  store.append(entry(MetaOpType::AddWorker, DisturbanceType::AreaBlocked, "old"));
  store.append(entry(MetaOpType::AddWorker, DisturbanceType::AreaBlocked, "new"));
  MemoryQuery q;
  q.disturbance = DisturbanceType::AreaBlocked;
  EXPECT_EQ(store.retrieve(q, 2)[0].details, "new");
}

TEST(Memory, PersistReloadIsBitExact) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::AreaBlocked, 4);
  MemoryStore store;
  RefinementOptions opt;
  opt.memory = &store;
  run_refinement(s.inst, s.base, s.instr, deterministic_policies(), opt);
  store.append(entry(MetaOpType::RemoveWorker, DisturbanceType::BadWeather, "extra"));
  ASSERT_GE(store.size(), 2u);

  const auto path = std::filesystem::temp_directory_path() / "crowdsense_memory_roundtrip.jsonl";
  store.save(path.string());
  MemoryStore back;
  back.load(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.to_jsonl(), store.to_jsonl());
  EXPECT_EQ(back.entries(), store.entries());
  for (DisturbanceType t : kAllDisturbanceTypes) {
    MemoryQuery q;
    q.disturbance = t;
    q.candidates = {MetaOpType::AddWorker, MetaOpType::ModifyPath};
    EXPECT_EQ(back.retrieve(q, 4), store.retrieve(q, 4));
  }
}

TEST(Solver, WithoutGuidanceTakesBestInsertion) {
  Instance inst;
  inst.grid = {3, 3, 4};
  inst.workers = {make_worker(0, {0, 0}, {2, 0}, 0, 2), make_worker(1, {0, 2}, {0, 2}, 0, 3)};
  inst.budget = 7;
  Solution cur;
  cur.assignments[WorkerId{0}] = Path{{{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}};  // the only legal route
  DisturbanceInstruction none;
  const DisturbedInstance d = apply_disturbance(inst, none);
  const Workspace ws(d, 3);
  SolverOptions opt;
  opt.batch_max = 1;
  const SolverStep step = solver_step(cur, ws, nullptr, {}, opt);
  ASSERT_EQ(step.edits.size(), 1u);
  EXPECT_EQ(step.edits[0].kind, EditKind::AddWorker);

  double best = -INFINITY;
  for (const Path& p : oracle::all_paths(inst.workers[1], inst.grid, 4)) {
    Solution s = cur;
    s.assignments[WorkerId{1}] = p;
    best = std::max(best, oracle::objective(s, inst.grid, 0.5));
  }
  EXPECT_NEAR(oracle::objective(step.solution, inst.grid, 0.5), best, 1e-9);
}

TEST(Solver, FeedbackSuggestionTakesPriority) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::ContinueOptimize, 2);
  DisturbedInstance d = apply_disturbance(s.inst, s.instr);
  const Workspace ws(d, collect_coverage(s.base.solution, s.inst.grid).quantity());
  const EvalReport full = eval_report(s.base.solution, s.base.solution, ws);
  const Assessment now = assess(s.base.solution, ws);
  // Keep only improving suggestions that are not the solver's own first choice.
  const SolverStep own = solver_step(s.base.solution, ws, nullptr, {});
  ASSERT_FALSE(own.edits.empty());
  EvalReport fb = full;
  fb.suggestions.clear();
  for (const Suggestion& sg : full.suggestions) {
    if (sg.edit == own.edits.front()) continue;
    const Solution after = apply_edit(s.base.solution, sg.edit);
    const Assessment a = assess(after, ws);
    if (a.feasible() && a.objective > now.objective + 1e-9) fb.suggestions.push_back(sg);
  }
  if (fb.suggestions.empty()) GTEST_SKIP() << "fixture has no alternative improving suggestion";
  const SolverStep step = solver_step(s.base.solution, ws, &fb, {});
  ASSERT_FALSE(step.edits.empty());
  EXPECT_EQ(step.edits.front(), fb.suggestions.front().edit);
  EXPECT_NE(step.explanation.find("[feedback]"), std::string::npos);
}

TEST(Solver, EditsBetweenReplays) {
  const Scenario a = scenario(Algorithm::TVPG, DisturbanceType::ContinueOptimize, 3);
  const PlanResult b = plan(a.inst, {Algorithm::GraphDP, 3});
  Solution s = a.base.solution;
  for (const Edit& e : edits_between(a.base.solution, b.solution)) s = apply_edit(s, e);
  EXPECT_EQ(s, b.solution);
}

TEST(Refinement, TraceEditsReplayAndHeatmapsConserve) {
  for (DisturbanceType t : kAllDisturbanceTypes) {
    const Scenario s = scenario(Algorithm::TVPG, t, 5);
    const RefinementTrace trace = refine(s);
    Solution cur = s.base.solution;
    for (const IterationRecord& r : trace.iterations) {
      for (const Edit& e : r.edits) cur = apply_edit(cur, e);
      ASSERT_EQ(cur, r.solution) << to_string(t) << " iter " << r.iter;
      std::vector<long> per_slot(static_cast<std::size_t>(s.inst.grid.num_slots), 0);
      for (const auto& [id, p] : r.solution.assignments)
        for (const Step& st : p.steps) ++per_slot[static_cast<std::size_t>(st.t)];
      for (int slot = 0; slot < s.inst.grid.num_slots; ++slot) {
        EXPECT_EQ(r.heatmaps.candidate_total(slot), per_slot[static_cast<std::size_t>(slot)]);
      }
    }
  }
}

TEST(Refinement, SuccessPassesIndependentRecheck) {
  for (DisturbanceType t : kAllDisturbanceTypes) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const Scenario s = scenario(Algorithm::TVPG, t, seed);
      const RefinementTrace trace = refine(s);
      if (!trace.success) continue;
      const DisturbedInstance d = apply_disturbance(s.inst, s.instr);
      EXPECT_TRUE(validate_solution(trace.final, d.effective_instance(), d.blocked).feasible) << to_string(t);
      DisturbedInstance dd = d;
      if (!dd.priority_cells.empty()) dd.baseline_priority_count = priority_visits(s.base.solution, dd.priority_cells);
      EXPECT_TRUE(check_handling(trace.final, dd).all_satisfied) << to_string(t);
      if (t == DisturbanceType::ContinueOptimize) {
        EXPECT_GT(oracle::objective(trace.final, s.inst.grid, 0.5), s.base.objective.objective);
      }
    }
  }
}

TEST(Refinement, BlockedAreaFollowsRepairExcursionRecovery) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::AreaBlocked, 4);
  const RefinementTrace trace = refine(s);
  ASSERT_GE(trace.iterations.size(), 3u);
  const DisturbedInstance d = apply_disturbance(s.inst, s.instr);
  ASSERT_FALSE(check_handling(s.base.solution, d).all_satisfied);  // baseline crosses the block
  const IterationRecord& repair = trace.iterations[0];
  const IterationRecord& excursion = trace.iterations[1];
  const IterationRecord& recovery = trace.iterations[2];
  EXPECT_TRUE(repair.feasible);
  EXPECT_LT(repair.metrics.objective_value, s.base.objective.objective);
  EXPECT_TRUE(excursion.excursion);
  EXPECT_FALSE(excursion.feasible);
  EXPECT_GT(excursion.metrics.cost, d.effective_budget);
  EXPECT_TRUE(recovery.feasible);
  EXPECT_GT(recovery.metrics.objective_value, repair.metrics.objective_value);
  EXPECT_TRUE(trace.success);
}

TEST(Refinement, BudgetIncreaseRaisesObjective) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Scenario s = scenario(Algorithm::GraphDP, DisturbanceType::BudgetChange, seed);
    const RefinementTrace trace = refine(s);
    EXPECT_TRUE(trace.success);
    EXPECT_GT(trace.final_metrics.objective_value, trace.baseline_metrics.objective_value);
  }
}

TEST(Refinement, BadWeatherSucceedsAtLowerObjective) {
  const Scenario s = scenario(Algorithm::GraphDP, DisturbanceType::BadWeather, 0);
  const RefinementTrace trace = refine(s);
  EXPECT_TRUE(trace.success);
  EXPECT_LE(trace.final_metrics.objective_value, trace.baseline_metrics.objective_value);
}

TEST(Refinement, Reproducible) {
  const Scenario s = scenario(Algorithm::MSA, DisturbanceType::MidPathVisit, 6);
  EXPECT_EQ(trace_jsonl(refine(s)), trace_jsonl(refine(s)));
  EXPECT_EQ(trace_summary(refine(s)).dump(), trace_summary(refine(s)).dump());
}

TEST(Refinement, TokenAccountingMonotone) {
  const Scenario s = scenario(Algorithm::TVPG, DisturbanceType::ContinueOptimize, 7);
  const RefinementTrace trace = refine(s);
  long prev = 0;
  for (const IterationRecord& r : trace.iterations) {
    EXPECT_GE(r.tokens.total(), prev);
    prev = r.tokens.total();
  }
  EXPECT_EQ(trace.tokens.total(), prev);
}
