#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "crowdsense/harness/scale.hpp"
#include "crowdsense/util/random.hpp"

namespace crowdsense {

namespace detail {

struct Hotspot {
  double cx, cy, sigma;
};

inline Cell sample_cell(const std::array<Hotspot, 3>& spots, const GridSpec& grid, Rng& rng) {
  const Hotspot& h = spots[rng.index(spots.size())];
  const double x = h.cx + h.sigma * rng.normal();
  const double y = h.cy + h.sigma * rng.normal();
  return {std::clamp(static_cast<int>(std::lround(x)), 0, grid.width - 1),
          std::clamp(static_cast<int>(std::lround(y)), 0, grid.height - 1)};
}

}  // namespace detail

/// Synthetic instance: origins and destinations drawn from a mixture of three
/// Gaussian hotspots, windows uniform sub-intervals of the horizon, unit speed
/// and reward. Destinations are redrawn until reachable within the window.
inline Instance generate_instance(const ScaleConfig& scale, std::uint64_t seed, double alpha = 0.5) {
  scale.validate();
  Rng rng(derive_seed(seed, 0x5CA1E));
  Instance inst;
  inst.grid = scale.grid();
  inst.budget = scale.budget;
  inst.alpha = alpha;

  std::array<detail::Hotspot, 3> spots{};
  const double spread = std::max(1.0, std::max(scale.width, scale.height) / 6.0);
  for (auto& s : spots) {
    s = {rng.unit() * (scale.width - 1), rng.unit() * (scale.height - 1), spread * (0.6 + 0.8 * rng.unit())};
  }

  const int T = inst.grid.num_slots;
  for (int i = 0; i < scale.workers; ++i) {
    Worker w;
    w.id = WorkerId{static_cast<std::uint32_t>(i)};
    w.t_start = rng.between(0, T - 2);
    w.t_end = rng.between(w.t_start + 1, T - 1);
    w.origin = detail::sample_cell(spots, inst.grid, rng);
    w.destination = detail::sample_cell(spots, inst.grid, rng);
    for (int attempt = 0; attempt < 16 && !w.reachable(); ++attempt) {
      w.destination = detail::sample_cell(spots, inst.grid, rng);
    }
    if (!w.reachable()) w.destination = w.origin;
    inst.workers.push_back(w);
  }
  inst.validate();
  return inst;
}

}  // namespace crowdsense
