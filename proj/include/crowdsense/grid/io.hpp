#pragma once

#include <charconv>
#include <string>

#include "crowdsense/grid/types.hpp"
#include "crowdsense/util/json.hpp"

namespace crowdsense {

inline WorkerId parse_worker_id(const std::string& text) {
  std::uint32_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) throw FormatError("bad worker id '" + text + "'");
  return WorkerId{value};
}

inline json to_json(const Path& path) {
  json steps = json::array();
  for (const Step& s : path.steps) steps.push_back({s.x, s.y, s.t});
  return steps;
}

/// {"worker_id": [[x, y, t], ...], ...}
inline json to_json(const Solution& solution) {
  json doc = json::object();
  for (const auto& [id, path] : solution.assignments) doc[to_string(id)] = to_json(path);
  return doc;
}

inline Path path_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("path must be an array of [x, y, t]");
  Path path;
  for (const json& step : j) {
    if (!step.is_array() || step.size() != 3) throw FormatError("path step must be [x, y, t]: " + step.dump());
    for (const json& v : step) {
      if (!v.is_number_integer()) throw FormatError("path coordinates must be integers: " + step.dump());
    }
    path.steps.push_back({step[0].get<int>(), step[1].get<int>(), step[2].get<int>()});
  }
  return path;
}

inline Solution solution_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("solution must be an object keyed by worker id");
  Solution solution;
  for (const auto& [key, value] : j.items()) solution.assignments[parse_worker_id(key)] = path_from_json(value);
  return solution;
}

inline json to_json(const GridSpec& g) {
  return {{"width", g.width}, {"height", g.height}, {"num_slots", g.num_slots}, {"slot_minutes", g.slot_minutes}};
}

inline GridSpec grid_from_json(const json& j) {
  try {
    return GridSpec{j.at("width").get<int>(), j.at("height").get<int>(), j.at("num_slots").get<int>(),
                    j.value("slot_minutes", 15.0)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("grid: ") + e.what());
  }
}

inline json to_json(const Worker& w) {
  return {{"id", to_underlying(w.id)},
          {"origin", {w.origin.x, w.origin.y}},
          {"destination", {w.destination.x, w.destination.y}},
          {"window", {w.t_start, w.t_end}},
          {"speed", w.speed},
          {"reward_per_step", w.reward_per_step}};
}

inline Worker worker_from_json(const json& j) {
  try {
    Worker w;
    w.id = WorkerId{j.at("id").get<std::uint32_t>()};
    w.origin = {j.at("origin").at(0).get<int>(), j.at("origin").at(1).get<int>()};
    w.destination = {j.at("destination").at(0).get<int>(), j.at("destination").at(1).get<int>()};
    w.t_start = j.at("window").at(0).get<int>();
    w.t_end = j.at("window").at(1).get<int>();
    w.speed = j.value("speed", 1.0);
    w.reward_per_step = j.value("reward_per_step", 1.0);
    return w;
  } catch (const json::exception& e) {
    throw FormatError(std::string("worker: ") + e.what());
  }
}

inline json to_json(const Instance& inst) {
  json workers = json::array();
  for (const Worker& w : inst.workers) workers.push_back(to_json(w));
  return {{"grid", to_json(inst.grid)}, {"budget", inst.budget}, {"alpha", inst.alpha}, {"workers", workers}};
}

inline Instance instance_from_json(const json& j) {
  Instance inst;
  try {
    inst.grid = grid_from_json(j.at("grid"));
    inst.budget = j.at("budget").get<double>();
    inst.alpha = j.value("alpha", 0.5);
    for (const json& w : j.at("workers")) inst.workers.push_back(worker_from_json(w));
  } catch (const json::exception& e) {
    throw FormatError(std::string("instance: ") + e.what());
  }
  inst.validate();
  return inst;
}

inline json to_json(const Violation& v) {
  json j = {{"worker", v.worker ? json(to_string(*v.worker)) : json("GLOBAL")},
            {"kind", to_string(v.kind)},
            {"detail", v.detail}};
  if (v.step) j["step"] = {v.step->x, v.step->y, v.step->t};
  return j;
}

/// Shape returned by the validate_worker_paths tool.
inline json to_json(const ValidationResult& r) {
  json per_worker = json::object();
  json global = json::array();
  for (const Violation& v : r.violations) {
    if (v.worker) {
      per_worker[to_string(*v.worker)].push_back(to_json(v));
    } else {
      global.push_back(to_json(v));
    }
  }
  return {{"overall_feasible", r.feasible}, {"validation_results", per_worker}, {"global", global}};
}

}  // namespace crowdsense
