#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/io.hpp"
#include "crowdsense/harness/disturb.hpp"
#include "crowdsense/harness/generate.hpp"
#include "crowdsense/harness/metrics.hpp"
#include "crowdsense/harness/suite.hpp"
#include "crowdsense/planners/plan.hpp"

namespace crowdsense {

struct CellKey {
  Dataset dataset = Dataset::TDrive;
  ScaleName scale = ScaleName::Small;
  Algorithm planner = Algorithm::TVPG;
  DisturbanceType disturbance = DisturbanceType::ContinueOptimize;

  std::string config() const { return scale_config(dataset, scale).label(); }
  std::string setting() const { return fmt::format("{}/{}", to_string(planner), to_string(disturbance)); }
  std::string slug() const { return fmt::format("{}_{}_{}", config(), to_string(planner), to_string(disturbance)); }
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  TrialOutcome outcome;
  std::string error;  // non-empty when the trial threw; it then counts as a failure at the baseline
  RefinementTrace trace;
};

struct CellResult {
  CellKey key;
  std::vector<TrialRecord> trials;
  MetricsRow row;
  std::string memory_jsonl;
};

struct ExperimentResult {
  MetricsTable table;
  std::vector<CellResult> cells;
};

/// Builds the policy set for one cell; called once per cell on the worker thread.
using PolicyFactory = std::function<Policies()>;

inline std::uint64_t trial_seed(std::uint64_t suite_seed, int trial) { return suite_seed + static_cast<std::uint64_t>(trial); }

/// One trial: instance, baseline, disturbance, refinement. Trial i of every
/// cell with the same scale uses the same instance.
inline TrialRecord run_trial(const CellKey& key, int trial, const SuiteConfig& suite, Policies policies,
                             MemoryStore& memory) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = trial_seed(suite.seed, trial);
  double j_base = std::numeric_limits<double>::quiet_NaN();
  double cost_base = 0.0;
  try {
    const Instance inst = generate_instance(scale_config(key.dataset, key.scale), rec.seed);
    PlannerConfig pc;
    pc.algorithm = key.planner;
    pc.seed = rec.seed;
    const PlanResult base = plan(inst, pc);
    j_base = base.objective.objective;
    cost_base = base.cost;
    const DisturbanceInstruction instr = make_disturbance(key.disturbance, inst, base.solution, rec.seed);
    RefinementOptions opt;
    opt.max_iterations = suite.max_iterations;
    opt.memory = &memory;
    rec.trace = run_refinement(inst, base, instr, policies, opt);
    rec.outcome = trial_outcome(rec.trace, base);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.outcome = {false, 0, j_base, j_base, cost_base, cost_base, 0};
  }
  return rec;
}

inline CellResult run_cell(const CellKey& key, const SuiteConfig& suite, Policies policies) {
  CellResult cell;
  cell.key = key;
  MemoryStore memory;
  std::vector<TrialOutcome> outcomes;
  for (int t = 0; t < suite.trials; ++t) {
    if (suite.reset_memory) memory.clear();
    cell.trials.push_back(run_trial(key, t, suite, policies, memory));
    outcomes.push_back(cell.trials.back().outcome);
  }
  cell.row = compute_metrics(outcomes, key.config(), key.setting());
  cell.memory_jsonl = memory.to_jsonl();
  return cell;
}

inline std::vector<CellKey> suite_cells(const SuiteConfig& suite) {
  std::vector<CellKey> cells;
  for (Dataset d : suite.datasets) {
    for (ScaleName s : suite.scales) {
      for (Algorithm a : suite.planners) {
        for (DisturbanceType t : suite.disturbances) cells.push_back({d, s, a, t});
      }
    }
  }
  return cells;
}

inline void write_experiment(const ExperimentResult& result, const SuiteConfig& suite) {
  namespace fs = std::filesystem;
  const fs::path root(suite.output_dir);
  fs::create_directories(root);
  write_text_file((root / "metrics.csv").string(), to_csv(result.table));
  write_json_file((root / "metrics.json").string(), to_json(result.table));
  json trials = json::array();
  for (const CellResult& c : result.cells) {
    for (const TrialRecord& t : c.trials) {
      json j = to_json(t.outcome);
      j["config"] = c.key.config();
      j["setting"] = c.key.setting();
      j["trial"] = t.trial;
      j["seed"] = t.seed;
      if (!t.error.empty()) j["error"] = t.error;
      trials.push_back(j);
    }
    if (suite.write_traces) {
      const fs::path dir = root / "traces" / c.key.slug();
      fs::create_directories(dir);
      for (const TrialRecord& t : c.trials) {
        if (!t.error.empty()) continue;
        write_text_file((dir / fmt::format("trial_{:02d}.jsonl", t.trial)).string(), trace_jsonl(t.trace));
        write_json_file((dir / fmt::format("trial_{:02d}.summary.json", t.trial)).string(), trace_summary(t.trace));
      }
      write_text_file((root / "traces" / (c.key.slug() + ".memory.jsonl")).string(), c.memory_jsonl);
    }
    if (suite.write_heatmaps) {
      for (const TrialRecord& t : c.trials) {
        if (!t.error.empty() || t.trace.iterations.empty()) continue;
        // The final iterate only: one set of images per trial keeps the output small.
        const IterationRecord* last = &t.trace.iterations.back();
        for (const IterationRecord& r : t.trace.iterations) {
          if (r.iter == t.trace.iterations_used) last = &r;
        }
        write_heatmaps(root / "heatmaps" / c.key.slug(), fmt::format("trial_{:02d}", t.trial), last->heatmaps);
      }
    }
  }
  write_json_file((root / "trials.json").string(), trials);
}

/// Runs every (dataset, scale, planner, disturbance) cell. Cells run on a
/// bounded pool; trials inside a cell run in order and share the cell's memory,
/// so results depend only on the suite and its seed. Rows come out in cell order.
inline ExperimentResult run_experiment(const SuiteConfig& suite, const PolicyFactory& make_policies = {},
                                       bool write = true) {
  suite.validate();
  const std::vector<CellKey> keys = suite_cells(suite);
  std::vector<CellResult> cells(keys.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      try {
        cells[i] = run_cell(keys[i], suite, make_policies ? make_policies() : deterministic_policies());
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = keys[i].slug() + ": " + e.what();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads =
      std::min<std::size_t>(keys.size(), suite.threads > 0 ? static_cast<std::size_t>(suite.threads) : hw);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (!first_error.empty()) throw std::runtime_error(first_error);

  ExperimentResult result;
  for (CellResult& c : cells) result.table.rows.push_back(c.row);
  result.cells = std::move(cells);
  if (write) write_experiment(result, suite);
  return result;
}

/// Markdown table with the averaging conventions spelled out underneath.
inline std::string render_report(const MetricsTable& t) {
  std::string out = "| config | setting | trials | SR % | AIR % | ANI | ACS | base J | final J |\n"
                    "|---|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const MetricsRow& r : t.rows) {
    out += fmt::format("| {} | {} | {} | {:.1f} | {:.3f} ± {:.3f} | {} | {:.2f} | {:.4f} | {:.4f} |\n", r.config,
                       r.setting, r.trials, r.sr, r.air, r.air_std,
                       std::isfinite(r.ani) ? fmt::format("{:.2f}", r.ani) : std::string("n/a"), r.acs,
                       r.base_objective, r.final_objective);
  }
  out += "\nSR: share of trials whose refinement succeeded within the iteration cap.\n"
         "AIR: mean over all trials of (J_final - J_base) / |J_base| * 100; failed trials count at their final "
         "iterate, trials with an empty baseline are left out.\n"
         "ANI: mean iterations_used over successful trials.\n"
         "ACS: mean cost_base - cost_final; negative means the refined plan costs more.\n";
  return out;
}

}  // namespace crowdsense
