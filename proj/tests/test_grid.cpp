#include <gtest/gtest.h>

#include <random>

#include "crowdsense/grid/io.hpp"
#include "crowdsense/grid/realize.hpp"
#include "crowdsense/grid/validate.hpp"
#include "crowdsense/harness/generate.hpp"
#include "oracles.hpp"

using namespace crowdsense;

namespace {

Worker make_worker(std::uint32_t id, Cell o, Cell d, int t0, int t1, double speed = 1.0) {
  Worker w;
  w.id = WorkerId{id};
  w.origin = o;
  w.destination = d;
  w.t_start = t0;
  w.t_end = t1;
  w.speed = speed;
  return w;
}

Path make_path(std::initializer_list<Step> steps) { return Path{std::vector<Step>(steps)}; }

bool has_kind(const ValidationResult& r, ViolationKind k) {
  for (const Violation& v : r.violations) {
    if (v.kind == k) return true;
  }
  return false;
}

}  // namespace

TEST(PathCost, UnitRewardTimesLength) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 0, 2);
  EXPECT_DOUBLE_EQ(path_cost(make_path({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}), w), 3.0);
}

TEST(PathCost, SingleStayStep) {
  const Worker w = make_worker(0, {1, 1}, {1, 1}, 0, 1);
  EXPECT_DOUBLE_EQ(path_cost(make_path({{1, 1, 0}}), w), 1.0);
}

TEST(PathCost, FullHorizonSmallPathsOverrunBudget) {
  const Instance inst = generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), 0);
  ASSERT_EQ(inst.workers.size(), 20u);
  EXPECT_EQ(inst.grid.num_slots, 8);
  Solution s;
  double total = 0.0;
  for (Worker w : inst.workers) {
    w.t_start = 0;
    w.t_end = 7;
    Path p;
    for (int t = 0; t < 8; ++t) p.steps.push_back({0, 0, t});
    total += path_cost(p, w);
    s.assignments[w.id] = p;
  }
  EXPECT_DOUBLE_EQ(total, 160.0);
  EXPECT_GT(total, inst.budget);
  EXPECT_TRUE(has_kind(validate_solution(s, inst), ViolationKind::BudgetExceeded));
}

TEST(PathCost, EmptyPathThrows) {
  EXPECT_THROW(path_cost(Path{}, make_worker(0, {0, 0}, {0, 0}, 0, 1)), DomainError);
}

TEST(PathCost, AdditiveOverConcatenation) {
  const Worker w = make_worker(0, {0, 0}, {3, 0}, 0, 5);
  const Path a = make_path({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}});
  const Path b = make_path({{3, 0, 3}, {3, 0, 4}});
  Path ab = a;
  ab.steps.insert(ab.steps.end(), b.steps.begin(), b.steps.end());
  EXPECT_DOUBLE_EQ(path_cost(ab, w), path_cost(a, w) + path_cost(b, w));
}

TEST(ValidatePath, StraightLineFeasible) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 0, 2);
  const auto r = validate_path(make_path({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}}), w, {3, 3, 3});
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.violations.empty());
}

TEST(ValidatePath, DiagonalIsIllegal) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 0, 2);
  const auto r = validate_path(make_path({{0, 0, 0}, {1, 1, 1}, {2, 0, 2}}), w, {3, 3, 3});
  EXPECT_FALSE(r.feasible);
  ASSERT_TRUE(has_kind(r, ViolationKind::IllegalMove));
  EXPECT_STREQ(to_string(ViolationKind::IllegalMove), "move-illegal");
}

TEST(ValidatePath, BlockedCellNamesStep) {
  const Worker w = make_worker(3, {3, 4}, {5, 4}, 0, 2);
  BlockedSet blocked;
  blocked.insert_all_slots({4, 4}, {8, 8, 8});
  const auto r = validate_path(make_path({{3, 4, 0}, {4, 4, 1}, {5, 4, 2}}), w, {8, 8, 8}, blocked);
  ASSERT_FALSE(r.feasible);
  bool found = false;
  for (const Violation& v : r.violations) {
    if (v.kind == ViolationKind::BlockedCell) {
      found = true;
      ASSERT_TRUE(v.step.has_value());
      EXPECT_EQ(*v.step, (Step{4, 4, 1}));
    }
  }
  EXPECT_TRUE(found);
}

TEST(ValidatePath, ReportsEveryViolation) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 1, 3);
  // Wrong start slot, a jump, and an out-of-grid step.
  const auto r = validate_path(make_path({{0, 0, 0}, {2, 0, 1}, {3, 0, 2}}), w, {3, 3, 4});
  EXPECT_TRUE(has_kind(r, ViolationKind::OriginMismatch));
  EXPECT_TRUE(has_kind(r, ViolationKind::IllegalMove));
  EXPECT_TRUE(has_kind(r, ViolationKind::OutOfBounds));
  EXPECT_TRUE(has_kind(r, ViolationKind::DestinationMismatch));
  EXPECT_GE(r.violations.size(), 4u);
}

TEST(ValidatePath, SpeedLimitEnforced) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 0, 3, 0.5);
  EXPECT_TRUE(has_kind(validate_path(make_path({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}, {2, 0, 3}}), w, {3, 3, 4}),
                       ViolationKind::SpeedLimit));
  EXPECT_TRUE(validate_path(make_path({{0, 0, 0}, {1, 0, 1}, {1, 0, 2}, {2, 0, 3}}), w, {3, 3, 4}).feasible);
}

TEST(ValidatePath, Pure) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 0, 2);
  const Path p = make_path({{0, 0, 0}, {1, 1, 1}, {2, 0, 2}});
  EXPECT_EQ(validate_path(p, w, {3, 3, 3}), validate_path(p, w, {3, 3, 3}));
}

TEST(ValidateSolution, BudgetGlobalCheck) {
  Instance inst;
  inst.grid = {3, 3, 3};
  inst.workers = {make_worker(0, {0, 0}, {2, 0}, 0, 2), make_worker(1, {0, 1}, {2, 1}, 0, 2)};
  inst.budget = 10;
  Solution s;
  s.assignments[WorkerId{0}] = make_path({{0, 0, 0}, {1, 0, 1}, {2, 0, 2}});
  s.assignments[WorkerId{1}] = make_path({{0, 1, 0}, {1, 1, 1}, {2, 1, 2}});
  EXPECT_TRUE(validate_solution(s, inst).feasible);
  EXPECT_DOUBLE_EQ(solution_cost(s, inst), 6.0);

  inst.budget = 5;
  const auto r = validate_solution(s, inst);
  ASSERT_FALSE(r.feasible);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, ViolationKind::BudgetExceeded);
  EXPECT_FALSE(r.violations[0].worker.has_value());
}

TEST(ValidateSolution, UnknownWorkerIsAViolation) {
  Instance inst;
  inst.grid = {3, 3, 3};
  inst.budget = 10;
  Solution s;
  s.assignments[WorkerId{9}] = make_path({{0, 0, 0}});
  const auto r = validate_solution(s, inst);
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(has_kind(r, ViolationKind::UnknownWorker));
}

TEST(RealizePath, AllStays) {
  const Worker w = make_worker(0, {0, 0}, {0, 0}, 0, 3);
  const auto r = realize_path(w, std::vector<Cell>{}, {3, 3, 4});
  ASSERT_TRUE(r);
  EXPECT_EQ(*r.path, make_path({{0, 0, 0}, {0, 0, 1}, {0, 0, 2}, {0, 0, 3}}));
}

TEST(RealizePath, WaypointMatchesEnumeration) {
  const Worker w = make_worker(0, {0, 0}, {2, 0}, 0, 4);
  const GridSpec g{3, 3, 5};
  const std::vector<Cell> wp{{1, 1}};
  const auto r = realize_path(w, wp, g);
  ASSERT_TRUE(r);
  EXPECT_EQ(r.path->size(), 5u);
  EXPECT_TRUE(r.path->visits({1, 1}));

  // Every legal 5-step path through (1, 1): exactly one moves x before y on each
  // leg and has no stays before the waypoint or after leaving it.
  int matches = 0;
  for (const Path& p : oracle::all_paths(w, g, 5)) {
    if (p.size() != 5 || !p.visits({1, 1})) continue;
    EXPECT_TRUE(validate_path(p, w, g).feasible);
    if (p == *r.path) ++matches;
  }
  EXPECT_EQ(matches, 1);
  EXPECT_EQ(*r.path, make_path({{0, 0, 0}, {1, 0, 1}, {1, 1, 2}, {2, 1, 3}, {2, 0, 4}}));
}

TEST(RealizePath, TooFarWaypointReportsLeg) {
  const Worker w = make_worker(0, {0, 0}, {1, 0}, 0, 3);
  const std::vector<Cell> wp{{4, 4}};
  const auto r = realize_path(w, wp, {5, 5, 4});
  ASSERT_FALSE(r);
  ASSERT_TRUE(r.failure.has_value());
  EXPECT_EQ(r.failure->leg, 0u);
  EXPECT_GT(r.failure->transitions_needed, r.failure->transitions_available);
}

TEST(RealizePath, WaypointOutsideGridThrows) {
  const Worker w = make_worker(0, {0, 0}, {1, 0}, 0, 3);
  const std::vector<Cell> wp{{7, 0}};
  EXPECT_THROW(realize_path(w, wp, {3, 3, 4}), DomainError);
}

TEST(RealizePath, OutputAlwaysValidates) {
  std::mt19937_64 rng(2024);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  int realized = 0;
  for (int i = 0; i < 10000; ++i) {
    const GridSpec g{pick(1, 8), pick(1, 8), pick(2, 12)};
    Worker w = make_worker(0, {pick(0, g.width - 1), pick(0, g.height - 1)},
                           {pick(0, g.width - 1), pick(0, g.height - 1)}, 0, 1);
    w.t_start = pick(0, g.num_slots - 2);
    w.t_end = pick(w.t_start + 1, g.num_slots - 1);
    w.speed = pick(0, 2) == 0 ? 0.5 : 1.0;
    std::vector<Cell> wps(static_cast<std::size_t>(pick(0, 3)));
    for (Cell& c : wps) c = {pick(0, g.width - 1), pick(0, g.height - 1)};
    const auto r = realize_path(w, wps, g);
    if (!r) {
      ASSERT_TRUE(r.failure.has_value());
      continue;
    }
    ++realized;
    const auto v = validate_path(*r.path, w, g);
    ASSERT_TRUE(v.feasible) << v.violations.front().detail;
    for (Cell c : wps) EXPECT_TRUE(r.path->visits(c));
  }
  EXPECT_GT(realized, 1000);
}

TEST(ValidatePath, MutationFuzzHasNoFalseAccepts) {
  std::mt19937_64 rng(99);
  const GridSpec g{6, 6, 10};
  int mutated = 0;
  while (mutated < 1000) {
    Worker w = make_worker(0, {int(rng() % 6), int(rng() % 6)}, {int(rng() % 6), int(rng() % 6)}, 0, 9);
    if (!w.reachable()) continue;
    const std::vector<Cell> wp{{int(rng() % 6), int(rng() % 6)}};
    const auto r = realize_path(w, wp, g);
    if (!r) continue;
    Path p = *r.path;
    // Inject one illegal move: a jump of two or more cells at a random interior step.
    const std::size_t i = 1 + rng() % (p.size() - 1);
    Step& s = p.steps[i];
    const Step& prev = p.steps[i - 1];
    s.x = prev.x + (prev.x < 3 ? 2 : -2);
    s.y = prev.y + (rng() % 2 ? 0 : (prev.y < 3 ? 1 : -1));
    ASSERT_FALSE(validate_path(p, w, g).feasible);
    ++mutated;
  }
}

TEST(GridIo, InstanceRoundTrip) {
  const Instance inst = generate_instance(scale_config(Dataset::TDrive, ScaleName::Small), 3);
  EXPECT_EQ(instance_from_json(to_json(inst)), inst);
}
