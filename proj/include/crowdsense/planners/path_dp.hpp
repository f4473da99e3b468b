#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/coverage/state.hpp"
#include "crowdsense/planners/problem.hpp"

namespace crowdsense {

/// One DP search over the time-expanded grid: start at a fixed step and arrive
/// at `target` somewhere in [earliest_end, latest_end].
struct DpQuery {
  Step start;
  int since_change = 0;  // slots since the last cell change at `start`, capped at move_interval - 1
  Cell target;
  int earliest_end = 0;
  int latest_end = 0;
  std::vector<Cell> required;  // each visited at least once; at most 6
};

struct DpCandidate {
  Path path;
  double reward = 0.0;
};

struct DpResult {
  std::vector<DpCandidate> candidates;  // best path per reachable end slot, ascending end slot
  std::optional<std::string> infeasible;

  bool ok() const { return !candidates.empty(); }
};

using StepBonus = std::function<double(const Step&)>;

/// Maximises sum of per-step rewards (coverage surrogate plus optional bonus) over
/// every path the worker can legally take: 4-neighbour moves or stays, one cell
/// change per move_interval slots, never entering a blocked step. Predecessors
/// are tried in the order +x, -x, +y, -y, stay with strict improvement, so a
/// move wins a tie against a stay.
inline DpResult path_dp(const Worker& worker, const GridSpec& grid, const CoverageState& base,
                        const DpQuery& q, const BlockedSet& blocked = {}, const StepBonus& bonus = {}) {
  DpResult result;
  if (q.required.size() > 6) throw DomainError("path_dp supports at most 6 required cells");
  if (!grid.contains(q.start) || !grid.contains(q.target)) throw DomainError("path_dp endpoints outside grid");
  const int latest = std::min(q.latest_end, grid.num_slots - 1);
  if (latest < q.earliest_end || latest < q.start.t) {
    result.infeasible = fmt::format("no admissible end slot in [{}, {}]", q.earliest_end, q.latest_end);
    return result;
  }
  if (blocked.blocks(q.start)) {
    result.infeasible = fmt::format("start ({}, {})@{} is blocked", q.start.x, q.start.y, q.start.t);
    return result;
  }

  const int W = grid.width, H = grid.height;
  const int K = worker.move_interval();
  const int M = 1 << q.required.size();
  const int full_mask = M - 1;
  const std::size_t states = static_cast<std::size_t>(W) * H * K * M;
  auto index = [&](int x, int y, int d, int m) {
    return ((static_cast<std::size_t>(y) * W + x) * K + d) * M + m;
  };
  auto required_bits = [&](int x, int y) {
    int bits = 0;
    for (std::size_t i = 0; i < q.required.size(); ++i) {
      if (q.required[i].x == x && q.required[i].y == y) bits |= 1 << i;
    }
    return bits;
  };
  auto reward = [&](const Step& s) { return base.step_surrogate(s) + (bonus ? bonus(s) : 0.0); };

  constexpr double kUnreached = -std::numeric_limits<double>::infinity();
  const int layers = latest - q.start.t + 1;
  std::vector<double> cur(states, kUnreached), next(states, kUnreached);
  std::vector<std::vector<std::int32_t>> parent(static_cast<std::size_t>(layers));

  const int d0 = std::clamp(q.since_change, 0, K - 1);
  cur[index(q.start.x, q.start.y, d0, required_bits(q.start.x, q.start.y))] = reward(q.start);

  auto harvest = [&](int layer, const std::vector<double>& values) {
    const int t = q.start.t + layer;
    if (t < q.earliest_end) return;
    double best = kUnreached;
    std::size_t best_state = 0;
    for (int d = 0; d < K; ++d) {
      const std::size_t s = index(q.target.x, q.target.y, d, full_mask);
      if (values[s] > best) {
        best = values[s];
        best_state = s;
      }
    }
    if (best == kUnreached) return;
    DpCandidate cand;
    cand.reward = best;
    cand.path.steps.resize(static_cast<std::size_t>(layer) + 1);
    std::size_t s = best_state;
    for (int l = layer; l >= 0; --l) {
      const std::size_t cell = s / (static_cast<std::size_t>(K) * M);
      cand.path.steps[static_cast<std::size_t>(l)] = {static_cast<int>(cell % W), static_cast<int>(cell / W),
                                                      q.start.t + l};
      if (l > 0) s = static_cast<std::size_t>(parent[static_cast<std::size_t>(l)][s]);
    }
    result.candidates.push_back(std::move(cand));
  };

  harvest(0, cur);
  static constexpr int kDx[4] = {1, -1, 0, 0};
  static constexpr int kDy[4] = {0, 0, 1, -1};
  for (int layer = 1; layer < layers; ++layer) {
    const int t = q.start.t + layer;
    std::fill(next.begin(), next.end(), kUnreached);
    auto& par = parent[static_cast<std::size_t>(layer)];
    par.assign(states, -1);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const Step here{x, y, t};
        if (blocked.blocks(here)) continue;
        const int bits = required_bits(x, y);
        const double r = reward(here);
        for (int d = 0; d < K; ++d) {
          for (int m = 0; m < M; ++m) {
            if ((m & bits) != bits) continue;
            double best = kUnreached;
            std::int32_t from = -1;
            // Predecessor masks: m minus any subset of this cell's bits.
            auto consider = [&](int px, int py, int pd) {
              for (int sub = bits;; sub = (sub - 1) & bits) {
                const int pm = (m & ~bits) | sub;
                const std::size_t ps = index(px, py, pd, pm);
                if (cur[ps] > best) {
                  best = cur[ps];
                  from = static_cast<std::int32_t>(ps);
                }
                if (sub == 0) break;
              }
            };
            if (d == 0) {
              for (int dir = 0; dir < 4; ++dir) {
                const int px = x - kDx[dir], py = y - kDy[dir];
                if (px < 0 || py < 0 || px >= W || py >= H) continue;
                consider(px, py, K - 1);
              }
            }
            if (K == 1) {
              consider(x, y, 0);
            } else if (d > 0) {
              consider(x, y, d - 1);
              if (d == K - 1) consider(x, y, K - 1);
            }
            if (from >= 0) {
              const std::size_t s = index(x, y, d, m);
              next[s] = best + r;
              par[s] = from;
            }
          }
        }
      }
    }
    std::swap(cur, next);
    harvest(layer, cur);
  }

  if (result.candidates.empty()) {
    result.infeasible = fmt::format("({}, {}) unreachable from ({}, {})@{} by slot {}", q.target.x, q.target.y,
                                    q.start.x, q.start.y, q.start.t, latest);
  }
  return result;
}

/// Whole-route query for a worker: origin at t_start to destination, with at most
/// `max_steps` steps (the budget cap) and the worker's required visits.
inline DpQuery route_query(const Worker& w, const PlanningProblem& problem, int max_steps) {
  DpQuery q;
  q.start = {w.origin.x, w.origin.y, w.t_start};
  q.since_change = w.move_interval() - 1;
  q.target = w.destination;
  q.earliest_end = w.t_start;
  const long cap = static_cast<long>(w.t_start) + std::max(max_steps, 0) - 1;
  q.latest_end = static_cast<int>(std::min<long>(w.t_end, cap));
  q.required = problem.required_for(w.id);
  return q;
}

}  // namespace crowdsense
