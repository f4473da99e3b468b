#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/util/errors.hpp"

namespace crowdsense {

enum class WorkerId : std::uint32_t {};

inline std::uint32_t to_underlying(WorkerId id) { return static_cast<std::uint32_t>(id); }
inline std::string to_string(WorkerId id) { return std::to_string(to_underlying(id)); }

struct Cell {
  int x = 0;
  int y = 0;

  auto operator<=>(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

/// One sensed location-time cell; a path is a sequence of these.
struct Step {
  int x = 0;
  int y = 0;
  int t = 0;

  Cell cell() const { return {x, y}; }
  auto operator<=>(const Step&) const = default;
};

struct GridSpec {
  int width = 1;
  int height = 1;
  int num_slots = 1;
  double slot_minutes = 15.0;

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool contains(const Step& s) const { return contains(s.cell()) && s.t >= 0 && s.t < num_slots; }
  long total_cells() const { return static_cast<long>(width) * height * num_slots; }
  long spatial_cells() const { return static_cast<long>(width) * height; }
  bool cubic() const { return width == height && height == num_slots; }

  void validate() const {
    if (width < 1 || height < 1 || num_slots < 1) {
      throw DomainError(fmt::format("grid {}x{}x{} must have positive extents", width, height,
                                    num_slots));
    }
  }

  bool operator==(const GridSpec&) const = default;
};

struct Worker {
  WorkerId id{};
  Cell origin;
  Cell destination;
  int t_start = 0;
  int t_end = 1;
  double speed = 1.0;
  double reward_per_step = 1.0;

  int window_length() const { return t_end - t_start; }

  /// Minimum number of slots between two consecutive cell changes.
  int move_interval() const {
    if (speed >= 1.0) return 1;
    return static_cast<int>(std::ceil(1.0 / speed - 1e-9));
  }

  /// Slot transitions needed to make `moves` cell changes at this worker's speed.
  int transitions_for(int moves) const { return moves == 0 ? 0 : (moves - 1) * move_interval() + 1; }

  /// Whether origin -> destination fits inside the availability window.
  bool reachable() const { return transitions_for(manhattan(origin, destination)) <= window_length(); }

  bool operator==(const Worker&) const = default;
};

struct Path {
  std::vector<Step> steps;

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
  const Step& front() const { return steps.front(); }
  const Step& back() const { return steps.back(); }

  bool visits(Cell c) const {
    return std::any_of(steps.begin(), steps.end(), [c](const Step& s) { return s.cell() == c; });
  }

  bool operator==(const Path&) const = default;
};

struct Instance {
  GridSpec grid;
  std::vector<Worker> workers;
  double budget = 0.0;
  double alpha = 0.5;

  const Worker* find(WorkerId id) const {
    auto it = std::find_if(workers.begin(), workers.end(), [id](const Worker& w) { return w.id == id; });
    return it == workers.end() ? nullptr : &*it;
  }

  void validate() const {
    grid.validate();
    if (budget < 0.0) throw DomainError("budget must be non-negative");
    if (alpha < 0.0 || alpha > 1.0) throw DomainError("alpha must lie in [0, 1]");
    std::set<WorkerId> seen;
    for (const Worker& w : workers) {
      if (!seen.insert(w.id).second) throw DomainError("duplicate worker id " + to_string(w.id));
      if (!grid.contains(w.origin) || !grid.contains(w.destination)) {
        throw DomainError("worker " + to_string(w.id) + " origin/destination outside grid");
      }
      if (w.t_start < 0 || w.t_start >= w.t_end || w.t_end > grid.num_slots - 1) {
        throw DomainError(fmt::format("worker {} window [{}, {}] outside slots 0..{}", to_string(w.id),
                                      w.t_start, w.t_end, grid.num_slots - 1));
      }
      if (!(w.speed > 0.0) || !(w.reward_per_step >= 0.0)) {
        throw DomainError("worker " + to_string(w.id) + " has non-positive speed or negative reward");
      }
      if (!w.reachable()) {
        throw DomainError("worker " + to_string(w.id) + " cannot reach its destination in its window");
      }
    }
  }

  bool operator==(const Instance&) const = default;
};

/// Recruited workers and their trajectories, ordered by worker id.
struct Solution {
  std::map<WorkerId, Path> assignments;

  bool empty() const { return assignments.empty(); }
  std::size_t size() const { return assignments.size(); }
  bool contains(WorkerId id) const { return assignments.count(id) != 0; }

  bool operator==(const Solution&) const = default;
};

/// A cell that may not be entered during slots [t_first, t_last].
struct BlockedArea {
  Cell cell;
  int t_first = 0;
  int t_last = 0;

  auto operator<=>(const BlockedArea&) const = default;
};

class BlockedSet {
 public:
  BlockedSet() = default;

  void insert(BlockedArea area) { areas_.insert(area); }
  void insert_all_slots(Cell c, const GridSpec& grid) { insert({c, 0, grid.num_slots - 1}); }

  bool blocks(const Step& s) const {
    return std::any_of(areas_.begin(), areas_.end(), [&s](const BlockedArea& a) {
      return a.cell == s.cell() && s.t >= a.t_first && s.t <= a.t_last;
    });
  }

  bool blocks_ever(Cell c) const {
    return std::any_of(areas_.begin(), areas_.end(), [c](const BlockedArea& a) { return a.cell == c; });
  }

  bool empty() const { return areas_.empty(); }
  const std::set<BlockedArea>& areas() const { return areas_; }

  bool operator==(const BlockedSet&) const = default;

 private:
  std::set<BlockedArea> areas_;
};

enum class ViolationKind {
  EmptyPath,
  OutOfBounds,
  TimeDiscontinuity,
  IllegalMove,
  SpeedLimit,
  OriginMismatch,
  DestinationMismatch,
  WindowViolation,
  BlockedCell,
  UnknownWorker,
  BudgetExceeded,
};

inline const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyPath: return "empty-path";
    case ViolationKind::OutOfBounds: return "out-of-bounds";
    case ViolationKind::TimeDiscontinuity: return "time-discontinuity";
    case ViolationKind::IllegalMove: return "move-illegal";
    case ViolationKind::SpeedLimit: return "speed-limit";
    case ViolationKind::OriginMismatch: return "origin-mismatch";
    case ViolationKind::DestinationMismatch: return "destination-mismatch";
    case ViolationKind::WindowViolation: return "window-violation";
    case ViolationKind::BlockedCell: return "blocked-cell";
    case ViolationKind::UnknownWorker: return "unknown-worker";
    case ViolationKind::BudgetExceeded: return "budget-exceeded";
  }
  return "unknown";
}

struct Violation {
  std::optional<WorkerId> worker;  // nullopt means GLOBAL
  ViolationKind kind{};
  std::string detail;
  std::optional<Step> step;

  bool operator==(const Violation&) const = default;
};

struct ValidationResult {
  bool feasible = true;
  std::vector<Violation> violations;

  void add(Violation v) {
    violations.push_back(std::move(v));
    feasible = false;
  }

  void merge(const ValidationResult& other) {
    for (const Violation& v : other.violations) add(v);
  }

  bool operator==(const ValidationResult&) const = default;
};

}  // namespace crowdsense
