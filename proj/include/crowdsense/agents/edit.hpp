#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/grid/io.hpp"

namespace crowdsense {

enum class EditKind { AddWorker, RemoveWorker, SwapWorkers, RerouteSegment, InsertWaypoint, RemoveWaypoint };

inline constexpr std::array<EditKind, 6> kAllEditKinds = {EditKind::AddWorker,      EditKind::RemoveWorker,
                                                          EditKind::SwapWorkers,    EditKind::RerouteSegment,
                                                          EditKind::InsertWaypoint, EditKind::RemoveWaypoint};

inline const char* to_string(EditKind k) {
  switch (k) {
    case EditKind::AddWorker: return "add_worker";
    case EditKind::RemoveWorker: return "remove_worker";
    case EditKind::SwapWorkers: return "swap_workers";
    case EditKind::RerouteSegment: return "reroute_segment";
    case EditKind::InsertWaypoint: return "insert_waypoint";
    case EditKind::RemoveWaypoint: return "remove_waypoint";
  }
  return "?";
}

inline EditKind edit_kind_from_string(std::string_view s) {
  for (EditKind k : kAllEditKinds) {
    if (s == to_string(k)) return k;
  }
  throw FormatError("unknown edit kind '" + std::string(s) + "'");
}

/// One atomic solution change. `path` is the target's complete new trajectory,
/// so applying an edit never needs a planner.
///   add_worker       targets {w}        path
///   remove_worker    targets {w}
///   swap_workers     targets {out, in}  path (for `in`)
///   reroute_segment  targets {w}        path, cells = cells newly entered
///   insert_waypoint  targets {w}        path, cells = {waypoint}
///   remove_waypoint  targets {w}        path, cells = {waypoint}
struct Edit {
  EditKind kind = EditKind::AddWorker;
  std::vector<WorkerId> targets;
  std::vector<Cell> cells;
  std::optional<Path> path;
  std::string reason;

  bool operator==(const Edit&) const = default;

  void validate_shape() const {
    auto need = [&](bool ok, const char* what) {
      if (!ok) throw DomainError(fmt::format("{} edit: {}", to_string(kind), what));
    };
    switch (kind) {
      case EditKind::RemoveWorker:
        need(targets.size() == 1, "needs exactly one target");
        need(!path, "takes no path");
        break;
      case EditKind::SwapWorkers:
        need(targets.size() == 2 && targets[0] != targets[1], "needs two distinct targets");
        need(path && !path->empty(), "needs the incoming worker's path");
        break;
      case EditKind::InsertWaypoint:
      case EditKind::RemoveWaypoint:
        need(cells.size() == 1, "needs exactly one waypoint cell");
        [[fallthrough]];
      case EditKind::AddWorker:
      case EditKind::RerouteSegment:
        need(targets.size() == 1, "needs exactly one target");
        need(path && !path->empty(), "needs a path");
        break;
    }
  }

  /// Worker whose trajectory the edit writes, if any.
  std::optional<WorkerId> written() const {
    if (kind == EditKind::RemoveWorker) return std::nullopt;
    return kind == EditKind::SwapWorkers ? targets[1] : targets[0];
  }

  std::string describe() const {
    std::vector<std::string> ids;
    for (WorkerId id : targets) ids.push_back(to_string(id));
    switch (kind) {
      case EditKind::AddWorker: return fmt::format("add worker {}", ids[0]);
      case EditKind::RemoveWorker: return fmt::format("remove worker {}", ids[0]);
      case EditKind::SwapWorkers: return fmt::format("swap worker {} out for worker {}", ids[0], ids[1]);
      case EditKind::RerouteSegment: return fmt::format("reroute worker {}", ids[0]);
      case EditKind::InsertWaypoint:
        return fmt::format("insert waypoint ({}, {}) for worker {}", cells[0].x, cells[0].y, ids[0]);
      case EditKind::RemoveWaypoint:
        return fmt::format("remove waypoint ({}, {}) from worker {}", cells[0].x, cells[0].y, ids[0]);
    }
    return {};
  }
};

/// Applies `e` to a copy of `s`. Throws DomainError when the edit does not fit
/// the solution (adding a present worker, touching an absent one).
inline Solution apply_edit(Solution s, const Edit& e) {
  e.validate_shape();
  const WorkerId first = e.targets[0];
  auto need_present = [&](WorkerId id, bool present) {
    if (s.contains(id) != present) {
      throw DomainError(fmt::format("{}: worker {} is {}assigned", to_string(e.kind), to_string(id),
                                    present ? "not " : "already "));
    }
  };
  switch (e.kind) {
    case EditKind::AddWorker:
      need_present(first, false);
      s.assignments[first] = *e.path;
      break;
    case EditKind::RemoveWorker:
      need_present(first, true);
      s.assignments.erase(first);
      break;
    case EditKind::SwapWorkers:
      need_present(first, true);
      need_present(e.targets[1], false);
      s.assignments.erase(first);
      s.assignments[e.targets[1]] = *e.path;
      break;
    case EditKind::RerouteSegment:
    case EditKind::InsertWaypoint:
    case EditKind::RemoveWaypoint:
      need_present(first, true);
      s.assignments[first] = *e.path;
      break;
  }
  return s;
}

inline json to_json(const Edit& e) {
  json targets = json::array();
  for (WorkerId id : e.targets) targets.push_back(to_underlying(id));
  json cells = json::array();
  for (Cell c : e.cells) cells.push_back({c.x, c.y});
  json j = {{"kind", to_string(e.kind)}, {"targets", targets}, {"cells", cells}, {"reason", e.reason}};
  j["path"] = e.path ? to_json(*e.path) : json(nullptr);
  return j;
}

inline Edit edit_from_json(const json& j) {
  Edit e;
  try {
    e.kind = edit_kind_from_string(j.at("kind").get<std::string>());
    for (const json& id : j.at("targets")) e.targets.push_back(WorkerId{id.get<std::uint32_t>()});
    for (const json& c : j.value("cells", json::array())) e.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
    if (j.contains("path") && !j.at("path").is_null()) e.path = path_from_json(j.at("path"));
    e.reason = j.value("reason", "");
  } catch (const json::exception& ex) {
    throw FormatError(std::string("edit: ") + ex.what());
  }
  try {
    e.validate_shape();
  } catch (const DomainError& ex) {
    throw FormatError(ex.what());
  }
  return e;
}

}  // namespace crowdsense
