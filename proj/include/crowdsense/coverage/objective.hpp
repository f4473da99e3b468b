#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/grid/types.hpp"

namespace crowdsense {

/// Multiset of sensed (x, y, t) cells, stored densely over the grid.
class CoverageMap {
 public:
  CoverageMap() = default;
  explicit CoverageMap(const GridSpec& grid)
      : grid_(grid), counts_(static_cast<std::size_t>(grid.total_cells()), 0) {}

  const GridSpec& grid() const { return grid_; }

  void add(const Step& s, int times = 1) {
    if (!grid_.contains(s)) {
      throw DomainError(fmt::format("coverage step ({}, {})@{} outside grid", s.x, s.y, s.t));
    }
    counts_[offset(s)] += static_cast<std::uint32_t>(times);
    quantity_ += times;
  }

  void add(const Path& path) {
    for (const Step& s : path.steps) add(s);
  }

  int count(const Step& s) const { return grid_.contains(s) ? static_cast<int>(counts_[offset(s)]) : 0; }
  long quantity() const { return quantity_; }
  bool empty() const { return quantity_ == 0; }

  /// Calls fn(step, count) for every cell with count >= 1, in (t, y, x) order.
  template <class Fn>
  void for_each_cell(Fn&& fn) const {
    for (int t = 0; t < grid_.num_slots; ++t) {
      for (int y = 0; y < grid_.height; ++y) {
        for (int x = 0; x < grid_.width; ++x) {
          const Step s{x, y, t};
          const auto n = counts_[offset(s)];
          if (n > 0) fn(s, static_cast<int>(n));
        }
      }
    }
  }

  /// Visits summed over one slot, as a height x width matrix.
  std::vector<std::vector<int>> slot_matrix(int t) const {
    std::vector<std::vector<int>> m(grid_.height, std::vector<int>(grid_.width, 0));
    for (int y = 0; y < grid_.height; ++y) {
      for (int x = 0; x < grid_.width; ++x) m[y][x] = count({x, y, t});
    }
    return m;
  }

  bool operator==(const CoverageMap&) const = default;

 private:
  std::size_t offset(const Step& s) const {
    return (static_cast<std::size_t>(s.t) * grid_.height + s.y) * grid_.width + s.x;
  }

  GridSpec grid_;
  std::vector<std::uint32_t> counts_;
  long quantity_ = 0;
};

inline int max_hierarchy_levels(const GridSpec& grid) {
  int levels = 0;
  while ((2 << levels) <= std::min(grid.width, grid.height)) ++levels;
  return levels;
}

struct ObjectiveConfig {
  double alpha = 0.5;
  int levels = 0;
  bool include_time_hierarchy = false;
  std::vector<double> level_weights;  // empty = uniform over levels 0..L

  /// Deepest hierarchy the grid admits; time is coarsened only on cubic grids.
  static ObjectiveConfig for_grid(const GridSpec& grid, double alpha = 0.5) {
    return {alpha, max_hierarchy_levels(grid), grid.cubic(), {}};
  }

  double weight(int level) const {
    return level_weights.empty() ? 1.0 : level_weights[static_cast<std::size_t>(level)];
  }

  void validate(const GridSpec& grid) const {
    if (alpha < 0.0 || alpha > 1.0) throw DomainError("alpha must lie in [0, 1]");
    if (levels < 0 || levels > max_hierarchy_levels(grid)) {
      throw DomainError(fmt::format("hierarchy depth {} exceeds floor(log2(min(W, H))) = {}", levels,
                                    max_hierarchy_levels(grid)));
    }
    if (!level_weights.empty() && level_weights.size() != static_cast<std::size_t>(levels) + 1) {
      throw DomainError("level_weights must have levels + 1 entries");
    }
  }
};

/// Dyadic block partition of the grid at one hierarchy level. Boundary blocks
/// absorb the remainder when an extent is not a power of two.
struct LevelLayout {
  int shift = 0;
  int blocks_x = 1;
  int blocks_y = 1;
  int blocks_t = 1;
  bool coarsen_time = false;

  LevelLayout(const GridSpec& grid, int level, bool include_time)
      : shift(level),
        blocks_x((grid.width + (1 << level) - 1) >> level),
        blocks_y((grid.height + (1 << level) - 1) >> level),
        blocks_t(include_time ? (grid.num_slots + (1 << level) - 1) >> level : grid.num_slots),
        coarsen_time(include_time) {}

  std::size_t block_count() const { return static_cast<std::size_t>(blocks_x) * blocks_y * blocks_t; }

  std::size_t block_of(const Step& s) const {
    const int bt = coarsen_time ? (s.t >> shift) : s.t;
    return (static_cast<std::size_t>(bt) * blocks_y + (s.y >> shift)) * blocks_x + (s.x >> shift);
  }
};

struct ObjectiveValue {
  double entropy = 0.0;
  long quantity = 0;
  double objective = -std::numeric_limits<double>::infinity();

  /// Empty coverage: an ordered minimum below every finite objective.
  bool is_sentinel() const { return quantity == 0; }
  static ObjectiveValue sentinel() { return {}; }
};

inline double shannon_bits(std::span<const long> counts, long total) {
  double h = 0.0;
  for (long n : counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

inline CoverageMap collect_coverage(const Solution& solution, const GridSpec& grid) {
  CoverageMap map(grid);
  for (const auto& [id, path] : solution.assignments) map.add(path);
  return map;
}

/// Weighted mean over levels of the Shannon entropy of block-aggregated counts.
inline double hierarchical_entropy(const CoverageMap& coverage, const ObjectiveConfig& config) {
  if (coverage.empty()) throw DomainError("hierarchical entropy of empty coverage (Q = 0)");
  config.validate(coverage.grid());
  double weighted = 0.0;
  double weight_sum = 0.0;
  for (int level = 0; level <= config.levels; ++level) {
    const LevelLayout layout(coverage.grid(), level, config.include_time_hierarchy);
    std::vector<long> blocks(layout.block_count(), 0);
    coverage.for_each_cell([&](const Step& s, int n) { blocks[layout.block_of(s)] += n; });
    weighted += config.weight(level) * shannon_bits(blocks, coverage.quantity());
    weight_sum += config.weight(level);
  }
  return weight_sum > 0.0 ? weighted / weight_sum : 0.0;
}

inline ObjectiveValue objective(const CoverageMap& coverage, const ObjectiveConfig& config) {
  if (coverage.empty()) return ObjectiveValue::sentinel();
  ObjectiveValue v;
  v.entropy = hierarchical_entropy(coverage, config);
  v.quantity = coverage.quantity();
  v.objective = config.alpha * v.entropy + (1.0 - config.alpha) * std::log2(static_cast<double>(v.quantity));
  return v;
}

/// objective(coverage + delta) - objective(coverage); +inf when coverage is empty
/// and delta is not, so any coverage beats none.
inline double marginal_gain(const CoverageMap& coverage, std::span<const Step> delta_cells,
                            const ObjectiveConfig& config) {
  if (delta_cells.empty()) return 0.0;
  if (coverage.empty()) return std::numeric_limits<double>::infinity();
  CoverageMap extended = coverage;
  for (const Step& s : delta_cells) extended.add(s);
  return objective(extended, config).objective - objective(coverage, config).objective;
}

inline double marginal_gain(const CoverageMap& coverage, const std::vector<Step>& delta_cells,
                            const ObjectiveConfig& config) {
  return marginal_gain(coverage, std::span<const Step>(delta_cells), config);
}

}  // namespace crowdsense
