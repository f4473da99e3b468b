#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/grid/types.hpp"

namespace crowdsense {

struct InfeasibleLeg {
  std::size_t leg = 0;  // 0 = origin -> first target; last = into destination
  Cell from;
  Cell to;
  int transitions_needed = 0;
  int transitions_available = 0;

  std::string message() const {
    return fmt::format("leg {} ({}, {}) -> ({}, {}) needs {} slot transitions but only {} remain", leg,
                       from.x, from.y, to.x, to.y, transitions_needed, transitions_available);
  }
};

struct RealizeResult {
  std::optional<Path> path;
  std::optional<InfeasibleLeg> failure;

  explicit operator bool() const { return path.has_value(); }
};

/// Expands origin -> waypoints -> destination into a slot-by-slot path ending at
/// `end_slot` (default: the end of the worker's window). Each leg moves along x
/// first, then y. Waypoint legs run as early as the speed allows, the destination
/// leg as late as possible, so all slack becomes stays at the final waypoint.
inline RealizeResult realize_path(const Worker& worker, std::span<const Cell> waypoints,
                                  const GridSpec& grid, std::optional<int> end_slot = std::nullopt) {
  for (Cell c : waypoints) {
    if (!grid.contains(c)) throw DomainError(fmt::format("waypoint ({}, {}) outside grid", c.x, c.y));
  }
  const int end = end_slot.value_or(worker.t_end);
  if (end < worker.t_start || end > worker.t_end) {
    throw DomainError(fmt::format("end slot {} outside window [{}, {}]", end, worker.t_start, worker.t_end));
  }
  const int available = end - worker.t_start;

  std::vector<Cell> moves;  // cell entered by each move, in order
  std::size_t pre_destination_moves = 0;
  Cell cursor = worker.origin;
  const std::size_t legs = waypoints.size() + 1;
  for (std::size_t leg = 0; leg < legs; ++leg) {
    const Cell target = leg < waypoints.size() ? waypoints[leg] : worker.destination;
    const Cell from = cursor;
    while (cursor.x != target.x) {
      cursor.x += cursor.x < target.x ? 1 : -1;
      moves.push_back(cursor);
    }
    while (cursor.y != target.y) {
      cursor.y += cursor.y < target.y ? 1 : -1;
      moves.push_back(cursor);
    }
    const int needed = worker.transitions_for(static_cast<int>(moves.size()));
    if (needed > available) {
      return {std::nullopt, InfeasibleLeg{leg, from, target, needed, available}};
    }
    if (leg < waypoints.size()) pre_destination_moves = moves.size();
  }

  const int interval = worker.move_interval();
  const std::size_t total = moves.size();
  const std::size_t tail = total - pre_destination_moves;
  // move_at[i] = transition index (1-based from t_start) at which move i happens.
  std::vector<int> move_at(total);
  for (std::size_t i = 0; i < pre_destination_moves; ++i) move_at[i] = 1 + static_cast<int>(i) * interval;
  for (std::size_t j = 0; j < tail; ++j) {
    move_at[total - 1 - j] = available - static_cast<int>(j) * interval;
  }

  Path path;
  path.steps.reserve(static_cast<std::size_t>(available) + 1);
  Cell position = worker.origin;
  std::size_t next_move = 0;
  for (int k = 0; k <= available; ++k) {
    while (next_move < total && move_at[next_move] == k) position = moves[next_move++];
    path.steps.push_back({position.x, position.y, worker.t_start + k});
  }
  return {std::move(path), std::nullopt};
}

inline RealizeResult realize_path(const Worker& worker, const std::vector<Cell>& waypoints,
                                  const GridSpec& grid, std::optional<int> end_slot = std::nullopt) {
  return realize_path(worker, std::span<const Cell>(waypoints), grid, end_slot);
}

/// Cells where a path turns or pauses, excluding its endpoints. Re-realizing these
/// reproduces the route shape for x-then-y paths.
inline std::vector<Cell> turning_points(const Path& path) {
  std::vector<Cell> points;
  if (path.size() < 3) return points;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const Cell prev = path.steps[i - 1].cell();
    const Cell here = path.steps[i].cell();
    const Cell next = path.steps[i + 1].cell();
    if (here == prev) continue;
    const int dx_in = here.x - prev.x, dy_in = here.y - prev.y;
    const int dx_out = next.x - here.x, dy_out = next.y - here.y;
    if (dx_in != dx_out || dy_in != dy_out) {
      if (points.empty() || points.back() != here) points.push_back(here);
    }
  }
  return points;
}

}  // namespace crowdsense
