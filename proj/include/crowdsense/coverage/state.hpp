#pragma once

#include <cmath>
#include <vector>

#include "crowdsense/coverage/objective.hpp"

namespace crowdsense {

/// n log2 n with 0 log 0 = 0.
inline double xlog2x(long n) { return n <= 0 ? 0.0 : static_cast<double>(n) * std::log2(static_cast<double>(n)); }

/// Incrementally maintained coverage: per-level block counts and S_l = sum n log2 n,
/// so that H_l = log2 Q - S_l / Q and J can be read in O(L) after each add/remove.
class CoverageState {
 public:
  CoverageState(const GridSpec& grid, ObjectiveConfig config) : grid_(grid), config_(std::move(config)) {
    config_.validate(grid_);
    for (int level = 0; level <= config_.levels; ++level) {
      layouts_.emplace_back(grid_, level, config_.include_time_hierarchy);
      counts_.emplace_back(layouts_.back().block_count(), 0);
      sums_.push_back(0.0);
      weight_sum_ += config_.weight(level);
    }
  }

  CoverageState(const CoverageMap& map, ObjectiveConfig config) : CoverageState(map.grid(), std::move(config)) {
    map.for_each_cell([&](const Step& s, int n) { add(s, n); });
  }

  const GridSpec& grid() const { return grid_; }
  const ObjectiveConfig& config() const { return config_; }
  long quantity() const { return quantity_; }
  int levels() const { return static_cast<int>(layouts_.size()); }

  void add(const Step& s, long times = 1) {
    if (!grid_.contains(s)) throw DomainError(fmt::format("step ({}, {})@{} outside grid", s.x, s.y, s.t));
    for (std::size_t l = 0; l < layouts_.size(); ++l) {
      long& n = counts_[l][layouts_[l].block_of(s)];
      sums_[l] += xlog2x(n + times) - xlog2x(n);
      n += times;
    }
    quantity_ += times;
  }

  void remove(const Step& s, long times = 1) {
    for (std::size_t l = 0; l < layouts_.size(); ++l) {
      long& n = counts_[l][layouts_[l].block_of(s)];
      if (n < times) throw DomainError("removing more visits than recorded");
      sums_[l] += xlog2x(n - times) - xlog2x(n);
      n -= times;
    }
    quantity_ -= times;
  }

  void add(const Path& path) {
    for (const Step& s : path.steps) add(s);
  }
  void remove(const Path& path) {
    for (const Step& s : path.steps) remove(s);
  }

  /// Block count containing `s` at `level`.
  long block_count(int level, const Step& s) const {
    return counts_[static_cast<std::size_t>(level)][layouts_[static_cast<std::size_t>(level)].block_of(s)];
  }

  double entropy() const {
    if (quantity_ == 0) return 0.0;
    const double q = static_cast<double>(quantity_);
    const double log_q = std::log2(q);
    double weighted = 0.0;
    for (std::size_t l = 0; l < layouts_.size(); ++l) {
      // Clamp float drift; H_l is never negative.
      weighted += config_.weight(static_cast<int>(l)) * std::max(0.0, log_q - sums_[l] / q);
    }
    return weight_sum_ > 0.0 ? weighted / weight_sum_ : 0.0;
  }

  ObjectiveValue value() const {
    if (quantity_ == 0) return ObjectiveValue::sentinel();
    ObjectiveValue v;
    v.entropy = entropy();
    v.quantity = quantity_;
    v.objective = config_.alpha * v.entropy + (1.0 - config_.alpha) * std::log2(static_cast<double>(quantity_));
    return v;
  }

  double objective() const { return value().objective; }

  /// J after adding `path`, without keeping the change.
  double objective_with(const Path& path) {
    add(path);
    const double j = objective();
    remove(path);
    return j;
  }

  /// Additive per-step surrogate for the path DP: minus the weighted growth in
  /// sum n log2 n caused by one more visit to each block containing `s`. For a
  /// fixed path length, maximising the sum of these rewards maximises E when no
  /// block is hit twice by the same path.
  double step_surrogate(const Step& s) const {
    double growth = 0.0;
    for (std::size_t l = 0; l < layouts_.size(); ++l) {
      const long n = counts_[l][layouts_[l].block_of(s)];
      growth += config_.weight(static_cast<int>(l)) * (xlog2x(n + 1) - xlog2x(n));
    }
    return -growth;
  }

 private:
  GridSpec grid_;
  ObjectiveConfig config_;
  std::vector<LevelLayout> layouts_;
  std::vector<std::vector<long>> counts_;
  std::vector<double> sums_;
  double weight_sum_ = 0.0;
  long quantity_ = 0;
};

}  // namespace crowdsense
