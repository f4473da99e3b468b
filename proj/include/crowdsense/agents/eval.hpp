#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/heatmap.hpp"
#include "crowdsense/agents/metrics.hpp"
#include "crowdsense/agents/toolkit.hpp"

namespace crowdsense {

struct Suggestion {
  Edit edit;
  std::string rationale;
  double estimated_gain = 0.0;  // predicted delta J, plus 100 per violation it clears
};

/// Rectangular block of the spatial grid used to talk about coverage gaps.
struct Region {
  std::string name;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  long visits = 0;                     // candidate visits, all slots
  long change = 0;                     // candidate minus baseline

  std::vector<Cell> cells() const {
    std::vector<Cell> out;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) out.push_back({x, y});
    }
    return out;
  }
  Cell center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
};

struct EvalReport {
  Metrics baseline_metrics;
  Metrics metrics;  // candidate
  MetricsDelta delta;
  HandlingReport handling;
  ValidationResult validation;
  Heatmaps heatmaps;
  std::vector<Region> low_regions;  // bottom-quartile regions, emptiest first
  std::vector<Suggestion> suggestions;
  std::string summary;
  std::string advice;  // free text from an external model; empty for the deterministic policy
};

/// Name for a region from where its centre sits; y = 0 is the top row.
inline std::string region_name(Cell c, const GridSpec& g) {
  auto band = [](int v, int extent, const char* lo, const char* mid, const char* hi) {
    if (extent < 3) return std::string(v * 2 < extent ? lo : hi);
    if (v * 3 < extent) return std::string(lo);
    if (v * 3 >= 2 * extent) return std::string(hi);
    return std::string(mid);
  };
  const std::string vertical = band(c.y, g.height, "top", "middle", "bottom");
  const std::string horizontal = band(c.x, g.width, "left", "center", "right");
  if (vertical == "middle" && horizontal == "center") return "central";
  return vertical + "-" + horizontal;
}

/// Partitions the grid into at most 4 x 4 rectangles and sums heatmap visits.
inline std::vector<Region> coverage_regions(const Heatmaps& h) {
  const GridSpec& g = h.grid;
  const int bw = std::max(1, (g.width + 3) / 4);
  const int bh = std::max(1, (g.height + 3) / 4);
  std::vector<Region> out;
  for (int y0 = 0; y0 < g.height; y0 += bh) {
    for (int x0 = 0; x0 < g.width; x0 += bw) {
      Region r;
      r.x0 = x0;
      r.y0 = y0;
      r.x1 = std::min(g.width, x0 + bw) - 1;
      r.y1 = std::min(g.height, y0 + bh) - 1;
      for (int t = 0; t < g.num_slots; ++t) {
        for (int y = r.y0; y <= r.y1; ++y) {
          for (int x = r.x0; x <= r.x1; ++x) {
            r.visits += h.candidate[t][y][x];
            r.change += h.diff[t][y][x];
          }
        }
      }
      r.name = region_name(r.center(), g);
      out.push_back(r);
    }
  }
  return out;
}

/// Regions at or below the first quartile of visits, emptiest first.
inline std::vector<Region> bottom_quartile(std::vector<Region> regions) {
  if (regions.empty()) return regions;
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) { return a.visits < b.visits; });
  const long cut = regions[(regions.size() - 1) / 4].visits;
  std::vector<Region> out;
  for (const Region& r : regions) {
    if (r.visits <= cut) out.push_back(r);
  }
  return out;
}

namespace detail {

inline void add_suggestion(std::vector<Suggestion>& out, const Solution& candidate, const Assessment& now,
                           const Workspace& ws, Edit edit, std::string rationale) {
  Solution after;
  try {
    after = apply_edit(candidate, edit);
  } catch (const DomainError&) {
    return;
  }
  const Assessment then = assess(after, ws);
  const int cleared = now.health.violations - then.health.violations;
  const double dj = std::isfinite(then.objective) && std::isfinite(now.objective) ? then.score - now.score : 0.0;
  if (cleared > 0) {
    rationale += fmt::format("; clears {} violation(s)", cleared);
    // A waypoint edit that repairs an invalid route rewrites that route wholesale.
    if ((edit.kind == EditKind::InsertWaypoint || edit.kind == EditKind::RemoveWaypoint) && candidate.contains(edit.targets[0])) {
      edit.cells = new_cells(candidate.assignments.at(edit.targets[0]), *edit.path);
      edit.kind = EditKind::RerouteSegment;
    }
  }
  out.push_back({std::move(edit), std::move(rationale), dj + 100.0 * cleared});
}

}  // namespace detail

inline EvalReport eval_report(const Solution& baseline, const Solution& candidate, const Workspace& ws) {
  EvalReport r;
  r.baseline_metrics = compute_metrics(baseline, ws.disturbed->base);
  r.metrics = compute_metrics(candidate, ws.effective);
  r.delta = metrics_delta(r.baseline_metrics, r.metrics);
  const Assessment now = assess(candidate, ws);
  r.handling = now.handling;
  r.validation = now.validation;
  r.heatmaps = make_heatmaps(baseline, candidate, ws.problem.grid);
  r.low_regions = bottom_quartile(coverage_regions(r.heatmaps));

  std::vector<Suggestion> out;
  for (Edit& e : repair_edits(candidate, ws)) {
    std::string why = e.reason;
    detail::add_suggestion(out, candidate, now, ws, std::move(e), std::move(why));
  }
  const double slack = ws.effective.budget - now.cost;
  const std::size_t region_limit = std::min<std::size_t>(2, r.low_regions.size());
  for (std::size_t k = 0; k < region_limit && !candidate.empty(); ++k) {
    const Region& region = r.low_regions[k];
    const Cell centre = region.center();
    // Nearest selected worker to the region centre.
    std::optional<WorkerId> nearest;
    int best = std::numeric_limits<int>::max();
    for (const auto& [id, path] : candidate.assignments) {
      if (ws.worker(id) == nullptr) continue;
      for (const Step& s : path.steps) {
        const int d = manhattan(s.cell(), centre);
        if (d < best) {
          best = d;
          nearest = id;
        }
      }
    }
    if (!nearest) continue;
    if (auto p = reroute_through_region(candidate, *nearest, region.cells(), ws, std::max(0.0, slack))) {
      const Path& old = candidate.assignments.at(*nearest);
      Edit e{EditKind::RerouteSegment, {*nearest}, detail::new_cells(old, *p), *p, {}};
      e.reason = fmt::format("reroute worker {} through the low-coverage {} region", to_string(*nearest), region.name);
      std::string why = fmt::format("{} ({} visits, {:+d} against the baseline)", e.reason, region.visits, region.change);
      detail::add_suggestion(out, candidate, now, ws, std::move(e), std::move(why));
    }
  }
  auto best_of = [&](ImprovementKinds kinds) {
    std::optional<Suggestion> top;
    std::vector<Suggestion> local;
    for (Edit& e : improvement_edits(candidate, ws, kinds)) {
      std::string why = e.reason;
      detail::add_suggestion(local, candidate, now, ws, std::move(e), std::move(why));
    }
    for (Suggestion& s : local) {
      if (!top || s.estimated_gain > top->estimated_gain + 1e-12) top = std::move(s);
    }
    if (top) out.push_back(std::move(*top));
  };
  if (slack > 1e-9) best_of({true, false, false, false, false});
  best_of({false, true, false, false, false});
  best_of({false, false, true, false, false});
  best_of({false, false, false, false, true});
  std::stable_sort(out.begin(), out.end(),
                   [](const Suggestion& a, const Suggestion& b) { return a.estimated_gain > b.estimated_gain; });
  r.suggestions = std::move(out);

  std::string status = r.handling.all_satisfied ? "all disturbances handled"
                                                : fmt::format("{} disturbance(s) not handled", r.handling.unsatisfied());
  r.summary = fmt::format("J {:.4f} -> {:.4f} ({:+.4f}); cost {:g} -> {:g} of {:g}; {} workers; {} violation(s); {}",
                          r.baseline_metrics.objective_value, r.metrics.objective_value, r.delta.d_objective,
                          r.baseline_metrics.cost, r.metrics.cost, ws.effective.budget, candidate.size(),
                          r.validation.violations.size(), status);
  if (!r.low_regions.empty()) r.summary += fmt::format("; thinnest coverage in the {} region", r.low_regions[0].name);
  return r;
}

inline EvalReport eval_report(const Solution& baseline, const Solution& candidate, const DisturbedInstance& disturbed) {
  const Workspace ws(disturbed, collect_coverage(baseline, disturbed.base.grid).quantity());
  return eval_report(baseline, candidate, ws);
}

}  // namespace crowdsense
