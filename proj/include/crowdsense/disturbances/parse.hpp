#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "crowdsense/disturbances/instruction.hpp"

namespace crowdsense {

/// Text that the rule-based parser cannot turn into an instruction.
class DisturbanceParseError : public FormatError {
 public:
  DisturbanceParseError(const std::string& reason, std::string text)
      : FormatError(reason + ": \"" + text + "\""), text_(std::move(text)) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

namespace detail {

inline const std::string kNumber = R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)";

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline bool has(const std::string& haystack, const char* needle) { return haystack.find(needle) != std::string::npos; }

inline double to_number(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

inline std::vector<int> integers_in(const std::string& s) {
  std::vector<int> out;
  static const std::regex re(R"(\d+)");
  for (std::sregex_iterator it(s.begin(), s.end(), re), end; it != end; ++it) out.push_back(std::stoi(it->str()));
  return out;
}

inline Worker parse_new_worker(const std::string& chunk, const std::string& text) {
  static const std::regex id_re(R"(worker\s+(\d+))");
  static const std::regex origin_re(R"(origin\s*\(\s*(\d+)\s*,\s*(\d+)\s*\))");
  static const std::regex dest_re(R"(destination\s*\(\s*(\d+)\s*,\s*(\d+)\s*\))");
  static const std::regex window_re(R"(window\s*\[\s*(\d+)\s*,\s*(\d+)\s*\])");
  static const std::regex speed_re("speed\\s+(" + kNumber + ")");
  static const std::regex reward_re("reward\\s+(" + kNumber + ")");
  std::smatch m;
  Worker w;
  if (!std::regex_search(chunk, m, id_re)) throw DisturbanceParseError("new worker without an id", text);
  w.id = WorkerId{static_cast<std::uint32_t>(std::stoul(m[1]))};
  if (!std::regex_search(chunk, m, origin_re)) throw DisturbanceParseError("new worker without an origin", text);
  w.origin = {std::stoi(m[1]), std::stoi(m[2])};
  if (!std::regex_search(chunk, m, dest_re)) throw DisturbanceParseError("new worker without a destination", text);
  w.destination = {std::stoi(m[1]), std::stoi(m[2])};
  if (!std::regex_search(chunk, m, window_re)) throw DisturbanceParseError("new worker without a window", text);
  w.t_start = std::stoi(m[1]);
  w.t_end = std::stoi(m[2]);
  if (std::regex_search(chunk, m, speed_re)) w.speed = to_number(m[1]);
  if (std::regex_search(chunk, m, reward_re)) w.reward_per_step = to_number(m[1]);
  return w;
}

}  // namespace detail

/// Reference rule-based parser: keyword classification, then pattern extraction of
/// numbers, coordinates and worker ids. Never guesses: anything it cannot map to
/// a schema-valid instruction raises DisturbanceParseError.
inline DisturbanceInstruction parse_disturbance(const std::string& text, const GridSpec& grid,
                                                const std::vector<Worker>& pool = {}) {
  using detail::has;
  const std::string t = detail::lower(text);
  DisturbanceInstruction d;
  d.description = text;

  static const std::regex coord_re(R"(\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\))");
  auto coords = [&](const std::string& s) {
    std::vector<std::pair<Cell, std::size_t>> out;  // cell, end offset of the match
    for (std::sregex_iterator it(s.begin(), s.end(), coord_re), end; it != end; ++it) {
      out.push_back({{std::stoi((*it)[1]), std::stoi((*it)[2])},
                     static_cast<std::size_t>(it->position() + it->length())});
    }
    return out;
  };
  std::set<WorkerId> known;
  for (const Worker& w : pool) known.insert(w.id);
  auto check_known = [&](WorkerId id) {
    if (!pool.empty() && !known.count(id)) {
      throw DisturbanceParseError("unknown worker " + to_string(id), text);
    }
  };

  std::smatch m;
  if ((has(t, "continue") || has(t, "keep") || has(t, "further")) && (has(t, "optimi") || has(t, "improv"))) {
    d.type = DisturbanceType::ContinueOptimize;
  } else if (has(t, "new worker")) {
    d.type = DisturbanceType::NewWorkerAvailable;
    std::size_t begin = 0;
    while (begin <= t.size()) {
      const std::size_t end = std::min(t.find(';', begin), t.size());
      const std::string chunk = t.substr(begin, end - begin);
      if (has(chunk, "worker")) d.new_workers.push_back(detail::parse_new_worker(chunk, text));
      begin = end + 1;
    }
    for (const Worker& w : d.new_workers) {
      if (known.count(w.id)) throw DisturbanceParseError("new worker id already in the pool", text);
    }
  } else if (has(t, "visit")) {
    d.type = DisturbanceType::MidPathVisit;
    static const std::regex visit_re(R"(worker\s+(\d+)[^();]*?\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\))");
    for (std::sregex_iterator it(t.begin(), t.end(), visit_re), end; it != end; ++it) {
      const RequiredVisit v{WorkerId{static_cast<std::uint32_t>(std::stoul((*it)[1]))},
                            {std::stoi((*it)[2]), std::stoi((*it)[3])}};
      check_known(v.worker);
      d.visits.push_back(v);
    }
  } else if (has(t, "weather") || has(t, "storm") || has(t, "rain") || has(t, "snow")) {
    d.type = DisturbanceType::BadWeather;
    d.amount = 0.5;
    static const std::regex factor_re("factor\\s+(" + detail::kNumber + ")");
    static const std::regex percent_re("(" + detail::kNumber + R"()\s*%)");
    if (std::regex_search(t, m, factor_re)) {
      d.amount = detail::to_number(m[1]);
    } else if (std::regex_search(t, m, percent_re)) {
      d.amount = detail::to_number(m[1]) / 100.0;
    }
  } else if (has(t, "budget")) {
    d.type = DisturbanceType::BudgetChange;
    static const std::regex number_re("budget\\D*?(" + detail::kNumber + ")");
    if (!std::regex_search(t, m, number_re)) throw DisturbanceParseError("budget change without an amount", text);
    double amount = detail::to_number(m[1]);
    const bool decrease = has(t, "decreas") || has(t, "cut") || has(t, "reduc") || has(t, "lower") ||
                          has(t, "drop") || has(t, "shrink") || has(t, "minus") || has(t, "fell");
    if (decrease) amount = -std::abs(amount);
    d.amount = amount;
  } else if (has(t, "priority") || has(t, "prioriti") || has(t, "important")) {
    d.type = DisturbanceType::PriorityArea;
    for (const auto& [c, _] : coords(t)) d.cells.push_back(c);
    static const std::regex weight_re("weight\\s+(" + detail::kNumber + ")");
    if (std::regex_search(t, m, weight_re)) d.weight = detail::to_number(m[1]);
  } else if (has(t, "block") || has(t, "closed") || has(t, "closure")) {
    d.type = DisturbanceType::AreaBlocked;
    static const std::regex range_re(R"(^\s*(?:during\s+)?slots?\s+(\d+)\s*(?:-|to)\s*(\d+))");
    for (const auto& [c, end] : coords(t)) {
      BlockedArea area{c, 0, grid.num_slots - 1};
      const std::string rest = t.substr(end);
      if (std::regex_search(rest, m, range_re)) {
        area.t_first = std::stoi(m[1]);
        area.t_last = std::stoi(m[2]);
      }
      d.areas.push_back(area);
    }
  } else if (has(t, "worker") && (has(t, "drop") || has(t, "unavailable") || has(t, "leave") || has(t, "quit") ||
                                  has(t, "cancel") || has(t, "not available") || has(t, "offline"))) {
    d.type = DisturbanceType::WorkerUnavailable;
    static const std::regex ids_re(R"(workers?\s+((?:\d+\s*(?:,|and|&)?\s*)+))");
    if (std::regex_search(t, m, ids_re)) {
      for (int id : detail::integers_in(m[1])) {
        d.workers.push_back(WorkerId{static_cast<std::uint32_t>(id)});
        check_known(d.workers.back());
      }
    }
  } else {
    throw DisturbanceParseError("unrecognised disturbance", text);
  }

  try {
    d.validate(grid);
  } catch (const DomainError& e) {
    throw DisturbanceParseError(e.what(), text);
  }
  return d;
}

/// Canonical text for an instruction; parse_disturbance(render(d)) recovers d's payload.
inline std::string render(const DisturbanceInstruction& d, const GridSpec& grid) {
  auto cell = [](Cell c) { return fmt::format("({}, {})", c.x, c.y); };
  std::vector<std::string> parts;
  switch (d.type) {
    case DisturbanceType::BudgetChange:
      if (d.amount > 0.0) return fmt::format("Budget increased by {}", d.amount);
      if (d.amount < 0.0) return fmt::format("Budget decreased by {}", -d.amount);
      return "Budget changed by 0";
    case DisturbanceType::AreaBlocked:
      for (const BlockedArea& a : d.areas) {
        if (a.t_first == 0 && a.t_last == grid.num_slots - 1) {
          parts.push_back(cell(a.cell));
        } else {
          parts.push_back(fmt::format("{} during slots {}-{}", cell(a.cell), a.t_first, a.t_last));
        }
      }
      return fmt::format("Area blocked of {}", fmt::join(parts, ", "));
    case DisturbanceType::PriorityArea:
      for (Cell c : d.cells) parts.push_back(cell(c));
      return fmt::format("Priority area {} with weight {}", fmt::join(parts, ", "), d.weight);
    case DisturbanceType::MidPathVisit:
      for (const RequiredVisit& v : d.visits) {
        parts.push_back(fmt::format("worker {} must visit {}", to_string(v.worker), cell(v.cell)));
      }
      return fmt::format("Mid-path visit: {}", fmt::join(parts, "; "));
    case DisturbanceType::WorkerUnavailable:
      for (WorkerId id : d.workers) parts.push_back(to_string(id));
      return d.workers.size() == 1 ? fmt::format("Worker {} drops out", parts.front())
                                   : fmt::format("Workers {} drop out", fmt::join(parts, ", "));
    case DisturbanceType::NewWorkerAvailable:
      for (const Worker& w : d.new_workers) {
        parts.push_back(fmt::format("New worker {} available: origin {}, destination {}, window [{}, {}], speed {}, "
                                    "reward {}",
                                    to_string(w.id), cell(w.origin), cell(w.destination), w.t_start, w.t_end, w.speed,
                                    w.reward_per_step));
      }
      return fmt::format("{}", fmt::join(parts, "; "));
    case DisturbanceType::BadWeather:
      return fmt::format("Bad weather reduces speed by factor {}", d.amount);
    case DisturbanceType::ContinueOptimize:
      return "Continue optimize";
  }
  return {};
}

}  // namespace crowdsense
