#pragma once

#include <cmath>
#include <set>

#include "crowdsense/coverage/objective.hpp"
#include "crowdsense/grid/validate.hpp"

namespace crowdsense {

/// Headline numbers the Eval agent reports for one solution.
struct Metrics {
  long covered_count = 0;  // distinct (x, y, t) cells with at least one visit
  double entropy = 0.0;    // 0 for empty coverage
  double objective_value = -std::numeric_limits<double>::infinity();
  double cost = 0.0;

  bool operator==(const Metrics&) const = default;
};

struct MetricsDelta {
  double d_covered = 0.0;
  double d_entropy = 0.0;
  double d_objective = 0.0;
  double d_cost = 0.0;

  bool operator==(const MetricsDelta&) const = default;
};

/// Always recomputed from the solution itself. Workers missing from `instance`
/// still contribute coverage but no cost.
inline Metrics compute_metrics(const Solution& solution, const Instance& instance) {
  Metrics m;
  const CoverageMap coverage = collect_coverage(solution, instance.grid);
  coverage.for_each_cell([&](const Step&, int n) { m.covered_count += n > 0 ? 1 : 0; });
  const ObjectiveValue v = objective(coverage, ObjectiveConfig::for_grid(instance.grid, instance.alpha));
  m.entropy = v.is_sentinel() ? 0.0 : v.entropy;
  m.objective_value = v.objective;
  m.cost = solution_cost(solution, instance);
  return m;
}

/// Candidate minus baseline. Two empty solutions differ by 0 in objective, not NaN.
inline MetricsDelta metrics_delta(const Metrics& base, const Metrics& cand) {
  MetricsDelta d;
  d.d_covered = static_cast<double>(cand.covered_count - base.covered_count);
  d.d_entropy = cand.entropy - base.entropy;
  d.d_objective = cand.objective_value == base.objective_value ? 0.0 : cand.objective_value - base.objective_value;
  d.d_cost = cand.cost - base.cost;
  return d;
}

}  // namespace crowdsense
