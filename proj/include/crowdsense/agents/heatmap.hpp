#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/coverage/objective.hpp"
#include "crowdsense/util/json.hpp"

namespace crowdsense {

/// Visit counts per slot, indexed [t][y][x].
using SlotMatrices = std::vector<std::vector<std::vector<long>>>;

struct Heatmaps {
  GridSpec grid;
  SlotMatrices baseline;
  SlotMatrices candidate;
  SlotMatrices diff;  // candidate - baseline

  long candidate_total(int t) const {
    long n = 0;
    for (const auto& row : candidate[static_cast<std::size_t>(t)]) {
      for (long v : row) n += v;
    }
    return n;
  }
};

inline SlotMatrices slot_matrices(const CoverageMap& coverage) {
  const GridSpec& g = coverage.grid();
  SlotMatrices m(static_cast<std::size_t>(g.num_slots),
                 std::vector<std::vector<long>>(static_cast<std::size_t>(g.height),
                                                std::vector<long>(static_cast<std::size_t>(g.width), 0)));
  coverage.for_each_cell([&](const Step& s, int n) { m[s.t][s.y][s.x] = n; });
  return m;
}

inline Heatmaps make_heatmaps(const Solution& baseline, const Solution& candidate, const GridSpec& grid) {
  Heatmaps h;
  h.grid = grid;
  h.baseline = slot_matrices(collect_coverage(baseline, grid));
  h.candidate = slot_matrices(collect_coverage(candidate, grid));
  h.diff = h.candidate;
  for (std::size_t t = 0; t < h.diff.size(); ++t) {
    for (std::size_t y = 0; y < h.diff[t].size(); ++y) {
      for (std::size_t x = 0; x < h.diff[t][y].size(); ++x) h.diff[t][y][x] -= h.baseline[t][y][x];
    }
  }
  return h;
}

/// Binary PGM (P5) with one tile per slot laid left to right, separated by a
/// one-pixel black column. Counts scale linearly to 0..255. For signed maps,
/// `signed_map` puts zero at mid-grey.
inline std::string to_pgm(const SlotMatrices& m, bool signed_map = false) {
  const int slots = static_cast<int>(m.size());
  const int height = slots ? static_cast<int>(m[0].size()) : 0;
  const int width = height ? static_cast<int>(m[0][0].size()) : 0;
  long peak = 0;
  for (const auto& slot : m) {
    for (const auto& row : slot) {
      for (long v : row) peak = std::max(peak, std::labs(v));
    }
  }
  const int image_w = std::max(1, slots * width + std::max(0, slots - 1));
  const int image_h = std::max(1, height);
  std::string pixels(static_cast<std::size_t>(image_w) * image_h, '\0');
  for (int t = 0; t < slots; ++t) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const long v = m[t][y][x];
        int level = 0;
        if (signed_map) {
          level = peak == 0 ? 128 : static_cast<int>(128 + (127.0 * static_cast<double>(v)) / static_cast<double>(peak));
        } else if (peak > 0) {
          level = static_cast<int>((255.0 * static_cast<double>(v)) / static_cast<double>(peak));
        }
        pixels[static_cast<std::size_t>(y) * image_w + t * (width + 1) + x] = static_cast<char>(level);
      }
    }
  }
  return fmt::format("P5\n{} {}\n255\n", image_w, image_h) + pixels;
}

inline json to_json(const Heatmaps& h) {
  return {{"width", h.grid.width},   {"height", h.grid.height}, {"num_slots", h.grid.num_slots},
          {"baseline", h.baseline}, {"candidate", h.candidate}, {"diff", h.diff}};
}

}  // namespace crowdsense
