#pragma once

#include "crowdsense/disturbances/handling.hpp"
#include "crowdsense/grid/io.hpp"

namespace crowdsense {

/// {"type": ..., "description": ..., "value": <type-specific>}
inline json to_json(const DisturbanceInstruction& d) {
  json value;
  switch (d.type) {
    case DisturbanceType::BudgetChange:
    case DisturbanceType::BadWeather:
      value = d.amount;
      break;
    case DisturbanceType::AreaBlocked:
      value = json::array();
      for (const BlockedArea& a : d.areas) value.push_back({a.cell.x, a.cell.y, a.t_first, a.t_last});
      break;
    case DisturbanceType::PriorityArea: {
      json cells = json::array();
      for (Cell c : d.cells) cells.push_back({c.x, c.y});
      value = {{"cells", cells}, {"weight", d.weight}};
      break;
    }
    case DisturbanceType::MidPathVisit:
      value = json::array();
      for (const RequiredVisit& v : d.visits) value.push_back({to_underlying(v.worker), v.cell.x, v.cell.y});
      break;
    case DisturbanceType::WorkerUnavailable:
      value = json::array();
      for (WorkerId id : d.workers) value.push_back(to_underlying(id));
      break;
    case DisturbanceType::NewWorkerAvailable:
      value = json::array();
      for (const Worker& w : d.new_workers) value.push_back(to_json(w));
      break;
    case DisturbanceType::ContinueOptimize:
      value = nullptr;
      break;
  }
  return {{"type", to_string(d.type)}, {"description", d.description}, {"value", value}};
}

inline DisturbanceInstruction instruction_from_json(const json& j, const GridSpec& grid) {
  DisturbanceInstruction d;
  try {
    d.type = disturbance_type_from_string(j.at("type").get<std::string>());
    d.description = j.value("description", "");
    const json& v = j.contains("value") ? j.at("value") : json(nullptr);
    switch (d.type) {
      case DisturbanceType::BudgetChange:
        d.amount = v.get<double>();
        break;
      case DisturbanceType::BadWeather:
        d.amount = v.is_null() ? 0.5 : v.get<double>();
        break;
      case DisturbanceType::AreaBlocked:
        for (const json& a : v) {
          const Cell c{a.at(0).get<int>(), a.at(1).get<int>()};
          if (a.size() >= 4) {
            d.areas.push_back({c, a.at(2).get<int>(), a.at(3).get<int>()});
          } else {
            d.areas.push_back({c, 0, grid.num_slots - 1});
          }
        }
        break;
      case DisturbanceType::PriorityArea:
        for (const json& c : v.at("cells")) d.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
        d.weight = v.value("weight", 1.0);
        break;
      case DisturbanceType::MidPathVisit:
        for (const json& r : v) {
          d.visits.push_back({WorkerId{r.at(0).get<std::uint32_t>()}, {r.at(1).get<int>(), r.at(2).get<int>()}});
        }
        break;
      case DisturbanceType::WorkerUnavailable:
        for (const json& id : v) d.workers.push_back(WorkerId{id.get<std::uint32_t>()});
        break;
      case DisturbanceType::NewWorkerAvailable:
        for (const json& w : v) d.new_workers.push_back(worker_from_json(w));
        break;
      case DisturbanceType::ContinueOptimize:
        break;
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("disturbance: ") + e.what());
  }
  try {
    d.validate(grid);
  } catch (const DomainError& e) {
    throw FormatError(std::string("disturbance: ") + e.what());
  }
  return d;
}

/// Disturbance files hold a list of instructions; a single object is accepted too.
inline std::vector<DisturbanceInstruction> instructions_from_json(const json& j, const GridSpec& grid) {
  std::vector<DisturbanceInstruction> out;
  if (j.is_array()) {
    for (const json& item : j) out.push_back(instruction_from_json(item, grid));
  } else {
    out.push_back(instruction_from_json(j, grid));
  }
  return out;
}

inline json to_json(const HandlingReport& r) {
  json entries = json::array();
  for (const HandlingEntry& e : r.entries) {
    entries.push_back({{"type", to_string(e.type)}, {"satisfied", e.satisfied}, {"detail", e.detail}});
  }
  return {{"all_satisfied", r.all_satisfied}, {"entries", entries}};
}

}  // namespace crowdsense
