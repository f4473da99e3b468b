// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria. `acceptance --only 1,4` runs a subset.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "crowdsense/agents/io.hpp"
#include "crowdsense/gateway/agents.hpp"
#include "crowdsense/gateway/mock.hpp"
#include "crowdsense/harness/experiment.hpp"
#include "crowdsense/planners/plan.hpp"
#include "oracles.hpp"

using namespace crowdsense;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Verdict()> run;
};

ScaleConfig tiny_scale(int workers, int w, int h, double budget, int slots) {
  ScaleConfig s = scale_config(Dataset::TDrive, ScaleName::Small);
  s.workers = workers;
  s.width = w;
  s.height = h;
  s.budget = budget;
  s.horizon_minutes = slots * s.slot_minutes;
  return s;
}

SuiteConfig small_suite(std::vector<Algorithm> planners, std::vector<DisturbanceType> types) {
  SuiteConfig s;
  s.trials = 20;
  s.seed = 0;
  s.planners = std::move(planners);
  s.disturbances = std::move(types);
  return s;
}

const CellResult& cell_for(const ExperimentResult& r, DisturbanceType t) {
  for (const CellResult& c : r.cells) {
    if (c.key.disturbance == t) return c;
  }
  throw std::logic_error("cell missing");
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Verdict oracle_equivalence() {
  double worst_ratio = INFINITY, worst_diff = 0.0;
  int below = 0, invalid = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Instance inst = oracle::micro_instance(seed);
    const double best = oracle::brute_force_best(inst);
    for (Algorithm a : kAllAlgorithms) {
      const PlanResult r = plan(inst, {a, seed});
      if (!validate_solution(r.solution, inst).feasible) ++invalid;
      const double want = oracle::objective(r.solution, inst.grid, inst.alpha);
      if (std::isfinite(want)) worst_diff = std::max(worst_diff, std::abs(r.objective.objective - want));
      else if (std::isfinite(r.objective.objective)) worst_diff = INFINITY;
      if (a != Algorithm::GraphDP) continue;
      const double floor = best - 0.05 * std::abs(best);
      if (r.objective.objective < floor - 1e-12) ++below;
      if (std::isfinite(best) && best > 0) worst_ratio = std::min(worst_ratio, r.objective.objective / best);
    }
  }
  return {below == 0 && invalid == 0 && worst_diff <= 1e-9,
          fmt::format("GraphDP below 95% of optimum on {}/50, worst ratio {:.4f}; max |J - oracle| {:.2e}; "
                      "invalid plans {}",
                      below, worst_ratio, worst_diff, invalid)};
}

Verdict planner_ordering() {
  std::map<Algorithm, double> mean;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), seed);
    for (Algorithm a : kAllAlgorithms) mean[a] += plan(inst, {a, seed}).objective.objective / 20.0;
  }
  bool graphdp_top = true;
  for (Algorithm a : kAllAlgorithms) graphdp_top = graphdp_top && mean[Algorithm::GraphDP] >= mean[a];
  const bool ok = mean[Algorithm::RN] < mean[Algorithm::TVPG] && mean[Algorithm::TVPG] <= mean[Algorithm::MSAGI] &&
                  mean[Algorithm::MSA] <= mean[Algorithm::MSAGI] && graphdp_top;
  std::string detail = "mean base J:";
  for (Algorithm a : kAllAlgorithms) detail += fmt::format(" {} {:.4f}", to_string(a), mean[a]);
  return {ok, detail};
}

Verdict feasibility_suite() {
  const ScaleConfig scales[] = {tiny_scale(6, 4, 4, 12, 4), tiny_scale(10, 6, 3, 25, 6),
                                scale_config(Dataset::TDrive, ScaleName::Small),
                                scale_config(Dataset::Grab, ScaleName::Small)};
  long emitted = 0, invalid = 0, over_budget = 0, errors = 0;
  std::string first;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const Instance inst = generate_instance(scales[i % 4], 1000 + i);
    const DisturbanceType type = kAllDisturbanceTypes[i % kAllDisturbanceTypes.size()];
    for (Algorithm a : kAllAlgorithms) {
      try {
        const PlanResult base = plan(inst, {a, i});
        ++emitted;
        if (!validate_solution(base.solution, inst).feasible) ++invalid;
        if (solution_cost(base.solution, inst) > inst.budget + 1e-9) ++over_budget;

        const DisturbanceInstruction instr = make_disturbance(type, inst, base.solution, i);
        const RefinementTrace trace = run_refinement(inst, base, instr, deterministic_policies());
        const DisturbedInstance d = apply_disturbance(inst, instr);
        const Instance eff = d.effective_instance();
        ++emitted;
        const ValidationResult v = validate_solution(trace.final, eff, d.blocked);
        if (!v.feasible) {
          ++invalid;
          if (first.empty()) {
            first = fmt::format("instance {} {} {}: {}", i, to_string(a), to_string(type), v.violations.front().detail);
          }
        }
        if (solution_cost(trace.final, eff) > eff.budget + 1e-9) ++over_budget;
      } catch (const std::exception& e) {
        ++errors;
        if (first.empty()) first = fmt::format("instance {} {}: {}", i, to_string(a), e.what());
      }
    }
  }
  return {invalid == 0 && over_budget == 0 && errors == 0,
          fmt::format("{} emitted solutions, {} invalid, {} over budget, {} errors{}", emitted, invalid, over_budget,
                      errors, first.empty() ? "" : "; first: " + first)};
}

Verdict refinement_effectiveness() {
  const ExperimentResult r =
      run_experiment(small_suite({Algorithm::TVPG}, {DisturbanceType::ContinueOptimize}), {}, false);
  const MetricsRow& row = r.table.rows.at(0);
  return {row.sr == 100.0 && row.air > 0.0 && row.ani <= 10.0,
          fmt::format("SR {:.1f}%, AIR {:.3f}%, ANI {:.2f} over {} trials", row.sr, row.air, row.ani, row.trials)};
}

Verdict disturbance_semantics() {
  const ExperimentResult r = run_experiment(
      small_suite({Algorithm::TVPG}, {DisturbanceType::BudgetChange, DisturbanceType::BadWeather,
                                      DisturbanceType::AreaBlocked, DisturbanceType::MidPathVisit,
                                      DisturbanceType::WorkerUnavailable}),
      {}, false);
  std::vector<std::string> parts;
  bool ok = true;

  int budget_up = 0;
  for (const TrialRecord& t : cell_for(r, DisturbanceType::BudgetChange).trials) {
    const auto air = improvement_rate(t.outcome.j_base, t.outcome.j_final);
    budget_up += air && *air > 0.0 ? 1 : 0;
  }
  ok = ok && budget_up == 20;
  parts.push_back(fmt::format("budget+ AIR>0 on {}/20", budget_up));

  const MetricsRow& weather = cell_for(r, DisturbanceType::BadWeather).row;
  ok = ok && weather.air < 0.0 && weather.sr >= 95.0;
  parts.push_back(fmt::format("bad weather AIR {:.3f}% SR {:.0f}%", weather.air, weather.sr));

  long blocked_steps = 0;
  for (const TrialRecord& t : cell_for(r, DisturbanceType::AreaBlocked).trials) {
    BlockedSet blocked;
    for (const BlockedArea& a : t.trace.instruction.areas) blocked.insert(a);
    for (const auto& [id, path] : t.trace.final.assignments)
      for (const Step& s : path.steps) blocked_steps += blocked.blocks(s) ? 1 : 0;
  }
  ok = ok && blocked_steps == 0;
  parts.push_back(fmt::format("blocked steps {}", blocked_steps));

  long pairs = 0, present = 0;
  for (const TrialRecord& t : cell_for(r, DisturbanceType::MidPathVisit).trials) {
    if (!t.trace.success) continue;
    for (const RequiredVisit& v : t.trace.instruction.visits) {
      ++pairs;
      const auto it = t.trace.final.assignments.find(v.worker);
      present += it != t.trace.final.assignments.end() && it->second.visits(v.cell) ? 1 : 0;
    }
  }
  ok = ok && pairs > 0 && present == pairs;
  parts.push_back(fmt::format("required visits {}/{}", present, pairs));

  long removed = 0, lingering = 0;
  for (const TrialRecord& t : cell_for(r, DisturbanceType::WorkerUnavailable).trials) {
    for (WorkerId id : t.trace.instruction.workers) {
      ++removed;
      lingering += t.trace.final.contains(id) ? 1 : 0;
    }
  }
  ok = ok && removed > 0 && lingering == 0;
  parts.push_back(fmt::format("unavailable workers kept {}/{}", lingering, removed));

  for (const CellResult& c : r.cells) {
    for (const TrialRecord& t : c.trials) ok = ok && t.error.empty();
  }
  return {ok, fmt::format("{}", fmt::join(parts, "; "))};
}

Verdict metric_fixtures() {
  // Five traces with hand-set metrics; compute_metrics is fed the traces themselves.
  struct Row {
    bool success;
    int iters;
    double jb, jf, cb, cf;
  };
  const Row rows[] = {{true, 2, 4.0, 4.2, 38, 36},
                      {true, 3, 5.0, 4.5, 40, 40},
                      {false, 10, 2.0, 2.0, 30, 33},
                      {true, 1, -INFINITY, 1.0, 0, 10},
                      {true, 4, 4.565, 4.632, 38, 40}};
  std::vector<RefinementTrace> traces;
  std::vector<PlanResult> baselines;
  for (const Row& r : rows) {
    RefinementTrace t;
    t.success = r.success;
    t.iterations_used = r.iters;
    t.baseline_metrics.objective_value = r.jb;
    t.final_metrics.objective_value = r.jf;
    t.final_metrics.cost = r.cf;
    PlanResult p;
    p.cost = r.cb;
    traces.push_back(t);
    baselines.push_back(p);
  }
  const MetricsRow m = compute_metrics(traces, baselines);
  // By hand: AIR terms 5, -10, 0, 100 * 0.067 / 4.565 (the empty baseline has none).
  const double table_air = 100.0 * 0.067 / 4.565;
  const double air = (5.0 - 10.0 + 0.0 + table_air) / 4.0;
  const double acs = (2.0 + 0.0 - 3.0 - 10.0 - 2.0) / 5.0;
  const bool ok = std::abs(m.sr - 80.0) <= 1e-9 && std::abs(m.air - air) <= 1e-9 && std::abs(m.ani - 2.5) <= 1e-9 &&
                  std::abs(m.acs - acs) <= 1e-9 && std::abs(*improvement_rate(4.565, 4.632) - 1.468) < 5e-4 &&
                  compute_metrics({TrialOutcome{true, 1, 4.0, 4.0, 38, 40, 0}}).acs == -2.0;
  return {ok, fmt::format("SR {:.1f} AIR {:.6f} (want {:.6f}) ANI {:.2f} ACS {:.2f}; 4.565 -> 4.632 gives {:.3f}%", m.sr,
                          m.air, air, m.ani, m.acs, *improvement_rate(4.565, 4.632))};
}

Verdict memory_correctness() {
  long total = 0, recovered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), seed);
    Instance pricing = inst;
    pricing.budget = 1e9;
    for (Algorithm a : {Algorithm::TVPG, Algorithm::GraphDP}) {
      const Solution base = plan(inst, {a, seed}).solution;
      const Metrics mb = compute_metrics(base, pricing);
      for (const auto& [id, path] : base.assignments) {
        Solution removed = base;
        removed.assignments.erase(id);
        const Metrics mr = compute_metrics(removed, pricing);
        total += 2;
        recovered += extract_meta_operation(base, removed, mb, mr, {}, pricing).op_type == MetaOpType::RemoveWorker;
        recovered += extract_meta_operation(removed, base, mr, mb, {}, pricing).op_type == MetaOpType::AddWorker;
        const auto stay = realize_path(*inst.find(id), std::vector<Cell>{}, inst.grid, path.back().t);
        if (stay && *stay.path != path) {
          Solution moved = base;
          moved.assignments[id] = *stay.path;
          ++total;
          recovered += extract_meta_operation(base, moved, mb, compute_metrics(moved, pricing), {}, pricing).op_type ==
                       MetaOpType::ModifyPath;
        }
      }
    }
  }

  auto entry = [](MetaOpType op, DisturbanceType d, std::string details) {
    MetaOperation m;
    m.op_type = op;
    m.details = std::move(details);
    m.context.disturbance = d;
    m.metric_gap = {1.0, 0.1, 0.1, 0.0};
    return m;
  };
  MemoryStore store;
  store.append(entry(MetaOpType::AddWorker, DisturbanceType::BudgetChange, "c"));
  store.append(entry(MetaOpType::AddWorker, DisturbanceType::AreaBlocked, "b"));
  store.append(entry(MetaOpType::ModifyPath, DisturbanceType::AreaBlocked, "a"));
  MemoryQuery q;
  q.candidates = {MetaOpType::ModifyPath};
  q.disturbance = DisturbanceType::AreaBlocked;
  // Hand cosines 1, 9/11, 7/11 (see the agents tests for the derivation).
  const auto top = store.retrieve(q, 3);
  const bool order = top.size() == 3 && top[0].details == "a" && top[1].details == "b" && top[2].details == "c" &&
                     std::abs(similarity(q, top[1]) - 9.0 / 11.0) < 1e-12 &&
                     std::abs(similarity(q, top[2]) - 7.0 / 11.0) < 1e-12;

  const fs::path p1 = fs::temp_directory_path() / "crowdsense_acceptance_mem1.jsonl";
  const fs::path p2 = fs::temp_directory_path() / "crowdsense_acceptance_mem2.jsonl";
  store.save(p1.string());
  MemoryStore back;
  back.load(p1.string());
  back.save(p2.string());
  const bool exact = read_bytes(p1) == read_bytes(p2) && back.entries() == store.entries() && back.retrieve(q, 3) == top;
  fs::remove(p1);
  fs::remove(p2);
  return {recovered == total && order && exact,
          fmt::format("op_type recovered {}/{}; cosine order {}; reload bit-exact {}", recovered, total,
                      order ? "ok" : "wrong", exact ? "yes" : "no")};
}

Verdict gateway_robustness() {
  std::mt19937_64 rng(8);
  long crashes = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const int n = static_cast<int>(rng() % 120);
    for (int k = 0; k < n; ++k) s += static_cast<char>(rng() % 4 == 0 ? "{}[]\":,"[rng() % 7] : rng() % 256);
    try {
      for (OutputKind kind : {OutputKind::Solver, OutputKind::Eval, OutputKind::Memory}) {
        const ParseResult r = parse_structured(s, kind);
        if (!r.ok() && r.error.message.empty()) ++crashes;
      }
    } catch (...) {
      ++crashes;
    }
  }

  const SuiteConfig suite =
      small_suite({Algorithm::TVPG}, {DisturbanceType::ContinueOptimize, DisturbanceType::AreaBlocked});
  GatewayConfig gc;
  gc.retry_backoff_seconds = 0.0;
  gc.requests_per_second = 1e6;
  gc.burst = 1000;
  std::vector<std::unique_ptr<MockChatClient>> clients;
  std::vector<std::unique_ptr<LlmPolicySet>> sets;
  std::mutex m;
  const PolicyFactory failing = [&] {
    std::lock_guard lock(m);
    clients.push_back(std::make_unique<MockChatClient>(std::vector<MockRule>{{"", "unavailable", 0, ""}}));
    sets.push_back(std::make_unique<LlmPolicySet>(*clients.back(), gc));
    return sets.back()->policies();
  };
  const ExperimentResult mocked = run_experiment(suite, failing, false);
  const ExperimentResult plain = run_experiment(suite, {}, false);
  bool same_sr = true, all_fallback = true;
  std::string srs;
  for (std::size_t i = 0; i < plain.table.rows.size(); ++i) {
    same_sr = same_sr && mocked.table.rows[i].sr == plain.table.rows[i].sr;
    srs += fmt::format(" {} {:.0f}/{:.0f}", to_string(mocked.cells[i].key.disturbance), mocked.table.rows[i].sr,
                       plain.table.rows[i].sr);
    for (const TrialRecord& t : mocked.cells[i].trials) {
      for (const IterationRecord& rec : t.trace.iterations) {
        all_fallback = all_fallback && std::find(rec.tags.begin(), rec.tags.end(), "fallback:solver") != rec.tags.end();
      }
    }
  }
  return {crashes == 0 && same_sr && all_fallback,
          fmt::format("fuzz crashes {}/10000; SR mock/deterministic:{}; every step fell back: {}", crashes, srs,
                      all_fallback ? "yes" : "no")};
}

Verdict reproducibility() {
  SuiteConfig suite;
  suite.trials = 20;
  suite.seed = 0;
  suite.datasets = {Dataset::TDrive, Dataset::Grab};
  suite.planners.assign(kAllAlgorithms.begin(), kAllAlgorithms.end());
  suite.disturbances.assign(kAllDisturbanceTypes.begin(), kAllDisturbanceTypes.end());
  suite.write_heatmaps = false;
  const fs::path root = fs::temp_directory_path() / "crowdsense_acceptance_repro";
  fs::remove_all(root);
  std::vector<fs::path> dirs = {root / "a", root / "b"};
  for (const fs::path& d : dirs) {
    SuiteConfig s = suite;
    s.output_dir = d.string();
    run_experiment(s, {}, true);
  }
  long files = 0, differing = 0;
  std::string first;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path rel = fs::relative(e.path(), dirs[0]);
    if (!fs::exists(dirs[1] / rel) || read_bytes(e.path()) != read_bytes(dirs[1] / rel)) {
      ++differing;
      if (first.empty()) first = rel.string();
    }
  }
  long files_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[1])) files_b += e.is_regular_file() ? 1 : 0;
  fs::remove_all(root);
  const bool ok = files > 0 && differing == 0 && files == files_b;
  return {ok, fmt::format("{} cells x 20 trials, {} files compared, {} differ{}", suite_cells(suite).size(), files,
                          differing + std::abs(files - files_b), first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence on 50 micro instances", 120, oracle_equivalence},
      {2, "planner ordering of mean base objective", 300, planner_ordering},
      {3, "feasibility of 200 instances x 6 planners with refinement", 0, feasibility_suite},
      {4, "refinement effectiveness, TVPG continue_optimize", 180, refinement_effectiveness},
      {5, "disturbance semantics", 600, disturbance_semantics},
      {6, "metric fixtures", 0, metric_fixtures},
      {7, "memory correctness", 0, memory_correctness},
      {8, "gateway robustness", 0, gateway_robustness},
      {9, "reproducibility of the full Small experiment", 0, reproducibility},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt::format("{:.1f} s", secs);
    if (c.limit_seconds > 0) {
      timing += fmt::format(" (limit {:.0f} s)", c.limit_seconds);
      if (secs > c.limit_seconds) {
        v.pass = false;
        v.detail += "; over the time limit";
      }
    }
    failed += v.pass ? 0 : 1;
    std::cout << fmt::format("[{}] {}. {}: {}; {}", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail, timing)
              << std::endl;
  }
  return failed;
}
