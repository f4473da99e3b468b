#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "crowdsense/agents/refinement.hpp"
#include "crowdsense/harness/disturb.hpp"
#include "crowdsense/harness/experiment.hpp"
#include "crowdsense/harness/generate.hpp"
#include "crowdsense/harness/ingest.hpp"
#include "crowdsense/harness/metrics.hpp"
#include "crowdsense/harness/suite.hpp"
#include "crowdsense/planners/plan.hpp"

using namespace crowdsense;

namespace {

const BoundingBox kBox{116.0, 116.8, 39.6, 40.4};  // 0.1 degree per cell on an 8 x 8 grid

IngestOptions options() {
  IngestOptions o;
  o.bbox = kBox;
  o.window_start = *parse_datetime("2008-02-02 15:00:00");
  return o;
}

// 10 rows: entity 1 and 2 usable, entity 3 has a single fix, one row is garbage.
const char* kTdriveCsv =
    "1,2008-02-02 15:00:00,116.05,39.65\n"
    "1,2008-02-02 15:20:00,116.25,39.65\n"
    "1,2008-02-02 15:45:00,116.35,39.65\n"
    "2,2008-02-02 15:15:00,116.45,40.35\n"
    "2,2008-02-02 15:30:00,116.45,40.25\n"
    "2,2008-02-02 15:36:00,116.45,40.25\n"
    "2,2008-02-02 15:48:00,116.45,40.15\n"
    "2,2008-02-02 16:00:00,116.55,40.15\n"
    "3,2008-02-02 15:00:00,116.75,39.95\n"
    "4,not a date,116.1,39.9\n";

TrialOutcome outcome(bool ok, int iters, double jb, double jf, double cb, double cf) {
  return {ok, iters, jb, jf, cb, cf, 0};
}

struct Trial {
  Instance inst;
  PlanResult base;
  RefinementTrace trace;
};

Trial run(DisturbanceType t, std::uint64_t seed) {
  Trial r;
  r.inst = generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), seed);
  r.base = plan(r.inst, {Algorithm::TVPG, seed});
  r.trace = run_refinement(r.inst, r.base, make_disturbance(t, r.inst, r.base.solution, seed), deterministic_policies());
  return r;
}

}  // namespace

TEST(Generate, SmallSeedZeroShape) {
  const Instance a = generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), 0);
  EXPECT_EQ(a.workers.size(), 20u);
  EXPECT_EQ(a.grid, (GridSpec{8, 8, 8}));
  EXPECT_EQ(a.budget, 40.0);
  EXPECT_EQ(a, generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), 0));
}

TEST(Ingest, TdriveFixture) {
  std::istringstream in(kTdriveCsv);
  const TrajectoryBatch batch = read_trajectories(in, Dataset::TDrive);
  EXPECT_EQ(batch.rows, 10);
  EXPECT_EQ(batch.skipped, 1);
  ASSERT_EQ(batch.errors.size(), 1u);

  const ScaleConfig sc = scale_config(Dataset::TDrive, ScaleName::Small);
  ASSERT_EQ(sc.slot_minutes * 60, 900);
  ASSERT_EQ(sc.horizon_minutes, 120);
  const IngestResult r = ingest_trajectories(batch.records, sc, options());
  EXPECT_EQ(r.entities, 3);
  EXPECT_EQ(r.dropped, 1);
  ASSERT_EQ(r.instance.workers.size(), 2u);
  // Densest entity first: entity 2 (5 fixes), then entity 1 (3 fixes).
  const Worker& w0 = r.instance.workers[0];
  EXPECT_EQ(w0.origin, (Cell{4, 7}));
  EXPECT_EQ(w0.destination, (Cell{5, 5}));
  EXPECT_EQ(w0.t_start, 1);
  EXPECT_EQ(w0.t_end, 4);
  const Worker& w1 = r.instance.workers[1];
  EXPECT_EQ(w1.origin, (Cell{0, 0}));
  EXPECT_EQ(w1.destination, (Cell{3, 0}));
  EXPECT_EQ(w1.t_start, 0);
  EXPECT_EQ(w1.t_end, 3);
  EXPECT_EQ(r.instance.budget, sc.budget);
}

TEST(Ingest, TooManyBadRowsFail) {
  std::istringstream in("1,2008-02-02 15:00:00,116.05,39.65\nbad\nworse\n");
  EXPECT_THROW(read_trajectories(in, Dataset::TDrive), FormatError);
}

TEST(Ingest, GrabFixture) {
  const std::int64_t t0 = 1554000000;
  std::ostringstream csv;
  csv << "trj_id,driving_mode,osname,pingtimestamp,rawlat,rawlng,speed,bearing,accuracy\n";
  csv << "70,car,android," << t0 << ",1.305,103.705,10,90,4\n";
  csv << "70,car,android," << t0 + 600 << ",1.305,103.735,10,90,4\n";
  csv << "71,car,android," << t0 + 60 << ",1.395,103.795,10,90,4\n";  // outside the box
  csv << "71,car,android," << t0 + 120 << ",1.399,103.799,10,90,4\n";
  std::istringstream in(csv.str());
  const TrajectoryBatch batch = read_trajectories(in, Dataset::Grab);
  EXPECT_EQ(batch.rows, 4);
  EXPECT_EQ(batch.skipped, 0);
  EXPECT_EQ(batch.records[0].longitude, 103.705);
  EXPECT_EQ(batch.records[0].latitude, 1.305);

  IngestOptions o;
  o.bbox = {103.7, 103.78, 1.3, 1.34};  // 0.01 degree per cell on the 8 x 4 grid
  o.window_start = t0;
  const ScaleConfig sc = scale_config(Dataset::Grab, ScaleName::Small);
  ASSERT_EQ(sc.width, 8);
  ASSERT_EQ(sc.height, 4);
  const IngestResult r = ingest_trajectories(batch.records, sc, o);
  EXPECT_EQ(r.entities, 2);
  EXPECT_EQ(r.dropped, 1);
  ASSERT_EQ(r.instance.workers.size(), 1u);
  EXPECT_EQ(r.instance.workers[0].origin, (Cell{0, 0}));
  EXPECT_EQ(r.instance.workers[0].destination, (Cell{3, 0}));
}

TEST(Ingest, PartlyOutsideBoxUsesInsideFixes) {
  std::istringstream in(
      "9,2008-02-02 15:00:00,115.95,39.65\n"  // west of the box
      "9,2008-02-02 15:20:00,116.15,39.65\n"
      "9,2008-02-02 15:40:00,116.15,39.75\n"
      "9,2008-02-02 17:30:00,116.75,39.75\n");  // after the window
  const IngestResult r = ingest_trajectories(read_trajectories(in, Dataset::TDrive).records,
                                             scale_config(Dataset::TDrive, ScaleName::Small), options());
  ASSERT_EQ(r.instance.workers.size(), 1u);
  EXPECT_EQ(r.instance.workers[0].origin, (Cell{1, 0}));
  EXPECT_EQ(r.instance.workers[0].destination, (Cell{1, 1}));
  EXPECT_EQ(r.instance.workers[0].t_start, 1);
}

TEST(Ingest, EdgeValuesGoToLowerBin) {
  // Bins of width 0.1 over (116.0, 116.8]: interior edges belong to the bin below.
  EXPECT_EQ(bin_index(116.0, 116.0, 116.8, 8), 0);
  EXPECT_EQ(bin_index(116.1, 116.0, 116.8, 8), 0);
  EXPECT_EQ(bin_index(116.1000001, 116.0, 116.8, 8), 1);
  EXPECT_EQ(bin_index(116.2, 116.0, 116.8, 8), 1);
  EXPECT_EQ(bin_index(116.7, 116.0, 116.8, 8), 6);
  EXPECT_EQ(bin_index(116.8, 116.0, 116.8, 8), 7);
  EXPECT_EQ(bin_index(39.9, 39.6, 40.4, 8), 2);

  std::istringstream in(
      "5,2008-02-02 15:00:00,116.1,39.7\n"
      "5,2008-02-02 15:10:00,116.3,39.9\n");
  const IngestResult r = ingest_trajectories(read_trajectories(in, Dataset::TDrive).records,
                                             scale_config(Dataset::TDrive, ScaleName::Small), options());
  ASSERT_EQ(r.instance.workers.size(), 1u);
  EXPECT_EQ(r.instance.workers[0].origin, (Cell{0, 0}));
  EXPECT_EQ(r.instance.workers[0].destination, (Cell{2, 2}));
}

TEST(Ingest, RowOrderDoesNotMatter) {
  std::mt19937_64 rng(30);
  std::vector<TrajectoryRecord> records;
  const std::int64_t start = options().window_start;
  for (int e = 0; e < 40; ++e) {
    const int fixes = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < fixes; ++k) {
      records.push_back({"taxi" + std::to_string(e), start + static_cast<std::int64_t>(rng() % 2400),
                         115.9 + double(rng() % 1000) / 1000.0, 39.5 + double(rng() % 1000) / 1000.0});
    }
  }
  const ScaleConfig sc = scale_config(Dataset::TDrive, ScaleName::Small);
  const Instance want = ingest_trajectories(records, sc, options()).instance;
  EXPECT_FALSE(want.workers.empty());
  for (int i = 0; i < 10; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    EXPECT_EQ(ingest_trajectories(records, sc, options()).instance, want);
  }
}

TEST(Metrics, SuccessRate) {
  std::vector<TrialOutcome> trials(20, outcome(true, 1, 4.0, 4.1, 38, 38));
  trials[7].success = false;
  EXPECT_DOUBLE_EQ(compute_metrics(trials).sr, 95.0);
}

TEST(Metrics, ImprovementRateTableExample) {
  const auto air = improvement_rate(4.565, 4.632);
  ASSERT_TRUE(air.has_value());
  EXPECT_NEAR(*air, 1.468, 5e-4);
  EXPECT_FALSE(improvement_rate(-INFINITY, 3.0).has_value());
  EXPECT_FALSE(improvement_rate(0.0, 3.0).has_value());
  EXPECT_NEAR(*improvement_rate(-2.0, -1.0), 50.0, 1e-12);
}

TEST(Metrics, CostSavingSign) {
  EXPECT_DOUBLE_EQ(compute_metrics({outcome(true, 1, 4.0, 4.0, 38, 40)}).acs, -2.0);
}

TEST(Metrics, FiveTrialFixture) {
  const std::vector<TrialOutcome> trials = {
      outcome(true, 2, 4.0, 4.2, 38, 36),       // AIR 5, ACS 2
      outcome(true, 3, 5.0, 4.5, 40, 40),       // AIR -10, ACS 0
      outcome(false, 10, 2.0, 2.0, 30, 33),     // AIR 0, ACS -3
      outcome(true, 1, -INFINITY, 1.0, 0, 10),  // empty baseline: no AIR, ACS -10
      outcome(true, 4, 4.565, 4.632, 38, 40),   // AIR 1.4677, ACS -2
  };
  const MetricsRow row = compute_metrics(trials, "tdrive-Small", "TVPG/continue_optimize");
  const double airs[] = {5.0, -10.0, 0.0, (4.632 - 4.565) / 4.565 * 100.0};
  const double air_mean = (airs[0] + airs[1] + airs[2] + airs[3]) / 4.0;
  double ss = 0.0;
  for (double a : airs) ss += (a - air_mean) * (a - air_mean);
  EXPECT_EQ(row.trials, 5);
  EXPECT_EQ(row.successes, 4);
  EXPECT_NEAR(row.sr, 80.0, 1e-9);
  EXPECT_EQ(row.air_trials, 4);
  EXPECT_NEAR(row.air, air_mean, 1e-9);
  EXPECT_NEAR(row.air_std, std::sqrt(ss / 3.0), 1e-9);
  EXPECT_NEAR(row.ani, (2 + 3 + 1 + 4) / 4.0, 1e-9);
  EXPECT_NEAR(row.acs, (2.0 + 0.0 - 3.0 - 10.0 - 2.0) / 5.0, 1e-9);
  EXPECT_NEAR(row.base_objective, (4.0 + 5.0 + 2.0 + 4.565) / 4.0, 1e-9);

  MetricsTable table{{row}};
  const MetricsTable back = metrics_table_from_json(to_json(table));
  EXPECT_NEAR(back.rows[0].air, row.air, 1e-12);
  EXPECT_NE(to_csv(table).find("TVPG/continue_optimize"), std::string::npos);
}

TEST(Metrics, NoSuccessesGivesNanAni) {
  const MetricsRow row = compute_metrics({outcome(false, 10, 3.0, 2.0, 30, 30)});
  EXPECT_TRUE(std::isnan(row.ani));
  EXPECT_EQ(row.sr, 0.0);
  EXPECT_TRUE(std::isnan(metrics_row_from_json(to_json(row)).ani));
}

TEST(Metrics, RecomputedFromTraceJson) {
  std::vector<RefinementTrace> traces;
  std::vector<PlanResult> baselines;
  std::vector<TrialOutcome> reread;
  double air_sum = 0.0;
  int air_n = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (DisturbanceType t : {DisturbanceType::ContinueOptimize, DisturbanceType::BudgetChange}) {
      Trial tr = run(t, seed);
      reread.push_back(trial_outcome_from_json(json::parse(to_json(trial_outcome(tr.trace, tr.base)).dump())));
      const double jb = tr.trace.baseline_metrics.objective_value, jf = tr.trace.final_metrics.objective_value;
      air_sum += (jf - jb) / std::abs(jb) * 100.0;
      ++air_n;
      traces.push_back(std::move(tr.trace));
      baselines.push_back(std::move(tr.base));
    }
  }
  const MetricsRow direct = compute_metrics(traces, baselines);
  const MetricsRow from_json = compute_metrics(reread);
  EXPECT_NEAR(direct.air, air_sum / air_n, 1e-9);
  EXPECT_NEAR(from_json.air, direct.air, 1e-9);
  EXPECT_NEAR(from_json.acs, direct.acs, 1e-9);
  EXPECT_NEAR(from_json.sr, direct.sr, 1e-9);
}

TEST(Metrics, MisalignedInputsRejected) {
  Trial a = run(DisturbanceType::ContinueOptimize, 0);
  Trial b = run(DisturbanceType::ContinueOptimize, 1);
  EXPECT_THROW(compute_metrics(std::vector<RefinementTrace>{a.trace, b.trace}, std::vector<PlanResult>{a.base}),
               DomainError);
  EXPECT_THROW(compute_metrics(std::vector<RefinementTrace>{a.trace}, std::vector<PlanResult>{b.base}), DomainError);
}

TEST(Suite, ParsesKeysSectionsAndComments) {
  const SuiteConfig c = parse_suite(R"(
# small sweep
datasets = [tdrive, grab]
scales = ["Small"]
planners = [TVPG, GraphDP]   # two planners
disturbances = [budget_change, bad_weather]
trials = 5
seed = 100
threads = 2
write_heatmaps = false
output_dir = "out/run #1"

[gateway]
model = "m"
max_retries = 1
)");
  EXPECT_EQ(c.datasets.size(), 2u);
  EXPECT_EQ(c.planners, (std::vector<Algorithm>{Algorithm::TVPG, Algorithm::GraphDP}));
  EXPECT_EQ(c.disturbances.back(), DisturbanceType::BadWeather);
  EXPECT_EQ(c.trials, 5);
  EXPECT_EQ(c.seed, 100u);
  EXPECT_FALSE(c.write_heatmaps);
  EXPECT_EQ(c.output_dir, "out/run #1");
  EXPECT_EQ(c.gateway.model, "m");
  EXPECT_EQ(c.gateway.max_retries, 1);
  EXPECT_EQ(suite_cells(c).size(), 2u * 1u * 2u * 2u);
}

TEST(Suite, RejectsBadInput) {
  EXPECT_THROW(parse_suite("colour = blue\n"), FormatError);
  EXPECT_THROW(parse_suite("trials = 0\n"), DomainError);
  EXPECT_THROW(parse_suite("policy = mock\n"), DomainError);
  EXPECT_THROW(parse_suite("planners = [TVPG, Dijkstra]\n"), std::exception);
  try {
    parse_suite("trials = 3\nseed = x\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Experiment, ReproducibleAndSeeded) {
  SuiteConfig suite;
  suite.trials = 3;
  suite.seed = 11;
  suite.threads = 2;
  suite.planners = {Algorithm::TVPG, Algorithm::RN};
  const ExperimentResult a = run_experiment(suite, {}, false);
  const ExperimentResult b = run_experiment(suite, {}, false);
  EXPECT_EQ(to_json(a.table).dump(), to_json(b.table).dump());
  ASSERT_EQ(a.cells.size(), 2u);
  for (const CellResult& c : a.cells) {
    ASSERT_EQ(c.trials.size(), 3u);
    for (const TrialRecord& t : c.trials) {
      EXPECT_EQ(t.seed, 11u + static_cast<std::uint64_t>(t.trial));
      EXPECT_TRUE(t.error.empty());
    }
    EXPECT_DOUBLE_EQ(c.row.sr, 100.0);
    EXPECT_GT(c.row.air, 0.0);
  }
  EXPECT_NE(render_report(a.table).find("| tdrive-Small | TVPG/continue_optimize |"), std::string::npos);
}
