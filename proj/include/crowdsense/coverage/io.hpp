#pragma once

#include "crowdsense/coverage/objective.hpp"
#include "crowdsense/util/json.hpp"

namespace crowdsense {

/// {"cells": [[x, y, t, count], ...]} in (t, y, x) order.
inline json to_json(const CoverageMap& coverage) {
  json cells = json::array();
  coverage.for_each_cell([&](const Step& s, int n) { cells.push_back({s.x, s.y, s.t, n}); });
  return {{"cells", cells}};
}

inline CoverageMap coverage_from_json(const json& j, const GridSpec& grid) {
  CoverageMap map(grid);
  try {
    for (const json& c : j.at("cells")) {
      map.add({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()}, c.at(3).get<int>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("coverage: ") + e.what());
  }
  return map;
}

inline json to_json(const ObjectiveValue& v) {
  return {{"entropy", v.entropy}, {"quantity", v.quantity}, {"objective", finite_or_tag(v.objective)}};
}

}  // namespace crowdsense
