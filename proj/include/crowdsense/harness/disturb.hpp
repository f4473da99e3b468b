#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "crowdsense/disturbances/parse.hpp"
#include "crowdsense/grid/realize.hpp"
#include "crowdsense/util/random.hpp"

namespace crowdsense {

/// Synthetic disturbance of `type` for a trial, anchored on the baseline so it
/// actually bites: the blocked cell is the baseline's busiest interior cell,
/// the dropped and re-routed workers are recruited ones, the priority area is
/// the least covered 2 x 2 block. The description is the canonical rendering.
inline DisturbanceInstruction make_disturbance(DisturbanceType type, const Instance& inst, const Solution& baseline,
                                               std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xD157 + type_index(type)));
  const GridSpec& g = inst.grid;
  DisturbanceInstruction d;
  d.type = type;
  std::vector<WorkerId> recruited;
  for (const auto& [id, _] : baseline.assignments) recruited.push_back(id);

  switch (type) {
    case DisturbanceType::BudgetChange:
      d.amount = std::max(1.0, std::round(0.25 * inst.budget));
      break;
    case DisturbanceType::AreaBlocked: {
      std::map<Cell, int> visits;
      std::vector<Cell> endpoints;
      for (const auto& [id, path] : baseline.assignments) {
        for (const Step& s : path.steps) ++visits[s.cell()];
        if (const Worker* w = inst.find(id)) {
          endpoints.push_back(w->origin);
          endpoints.push_back(w->destination);
        }
      }
      Cell pick{g.width / 2, g.height / 2};
      int most = -1;
      for (const auto& [c, n] : visits) {
        if (std::find(endpoints.begin(), endpoints.end(), c) != endpoints.end()) continue;
        if (n > most) {
          most = n;
          pick = c;
        }
      }
      d.areas.push_back({pick, 0, g.num_slots - 1});
      break;
    }
    case DisturbanceType::PriorityArea: {
      long fewest = -1;
      Cell corner{0, 0};
      for (int y = 0; y + 1 < std::max(2, g.height); ++y) {
        for (int x = 0; x + 1 < std::max(2, g.width); ++x) {
          long n = 0;
          for (const auto& [id, path] : baseline.assignments) {
            for (const Step& s : path.steps) n += (s.x - x == 0 || s.x - x == 1) && (s.y - y == 0 || s.y - y == 1);
          }
          if (fewest < 0 || n < fewest) {
            fewest = n;
            corner = {x, y};
          }
        }
      }
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const Cell c{corner.x + dx, corner.y + dy};
          if (g.contains(c)) d.cells.push_back(c);
        }
      }
      d.weight = 1.0;
      break;
    }
    case DisturbanceType::MidPathVisit: {
      if (recruited.empty()) recruited.push_back(inst.workers.front().id);
      rng.shuffle(recruited);
      for (WorkerId id : recruited) {
        const Worker& w = *inst.find(id);
        auto it = baseline.assignments.find(id);
        std::vector<Cell> options;
        for (int y = 0; y < g.height; ++y) {
          for (int x = 0; x < g.width; ++x) {
            const Cell c{x, y};
            if (it != baseline.assignments.end() && it->second.visits(c)) continue;
            if (realize_path(w, std::vector<Cell>{c}, g)) options.push_back(c);
          }
        }
        if (options.empty()) continue;
        d.visits.push_back({id, options[rng.index(options.size())]});
        break;
      }
      if (d.visits.empty()) d.visits.push_back({recruited.front(), inst.find(recruited.front())->origin});
      break;
    }
    case DisturbanceType::WorkerUnavailable:
      if (recruited.empty()) recruited.push_back(inst.workers.front().id);
      d.workers.push_back(recruited[rng.index(recruited.size())]);
      break;
    case DisturbanceType::NewWorkerAvailable: {
      std::uint32_t next = 0;
      for (const Worker& w : inst.workers) next = std::max(next, to_underlying(w.id) + 1);
      Worker w;
      w.id = WorkerId{next};
      w.t_start = rng.between(0, std::max(0, g.num_slots - 2));
      w.t_end = rng.between(w.t_start + 1, g.num_slots - 1);
      w.origin = {rng.between(0, g.width - 1), rng.between(0, g.height - 1)};
      w.destination = {rng.between(0, g.width - 1), rng.between(0, g.height - 1)};
      if (!w.reachable()) w.destination = w.origin;
      d.new_workers.push_back(w);
      break;
    }
    case DisturbanceType::BadWeather:
      d.amount = 0.5;
      break;
    case DisturbanceType::ContinueOptimize:
      break;
  }
  d.description = render(d, g);
  d.validate(g);
  return d;
}

}  // namespace crowdsense
