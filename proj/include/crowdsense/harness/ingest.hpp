#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/harness/scale.hpp"

namespace crowdsense {

struct TrajectoryRecord {
  std::string entity;
  std::int64_t timestamp = 0;  // seconds since the Unix epoch, UTC
  double longitude = 0.0;
  double latitude = 0.0;

  auto operator<=>(const TrajectoryRecord&) const = default;
};

struct BoundingBox {
  double lon_min = 0.0, lon_max = 0.0;
  double lat_min = 0.0, lat_max = 0.0;

  void validate() const {
    if (!(lon_max > lon_min) || !(lat_max > lat_min) || !std::isfinite(lon_min) || !std::isfinite(lon_max) ||
        !std::isfinite(lat_min) || !std::isfinite(lat_max)) {
      throw DomainError("bounding box must have positive, finite extent");
    }
  }
  bool contains(double lon, double lat) const {
    return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
  }
};

struct TrajectoryBatch {
  std::vector<TrajectoryRecord> records;
  long rows = 0;
  long skipped = 0;
  std::vector<std::string> errors;  // first few, for the CLI
};

inline constexpr double kMaxSkipFraction = 0.10;

/// "2008-02-02 15:36:08" (or with a 'T') as UTC seconds.
inline std::optional<std::int64_t> parse_datetime(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  int used = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &sec, &used) != 7) {
    return std::nullopt;
  }
  if ((sep != ' ' && sep != 'T') || static_cast<std::size_t>(used) != s.size()) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60 || h < 0 || mi < 0 || sec < 0) return std::nullopt;
  return sys_days{ymd}.time_since_epoch() / seconds{1} + h * 3600 + mi * 60 + sec;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',') out.emplace_back();
    else if (c != '\r') out.back() += c;
  }
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

inline std::optional<double> finite_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// T-Drive rows: id,datetime,longitude,latitude (no header).
inline std::optional<TrajectoryRecord> parse_tdrive_row(const std::string& line) {
  const auto f = detail::split_csv(line);
  if (f.size() != 4 || f[0].empty()) return std::nullopt;
  const auto ts = parse_datetime(f[1]);
  const auto lon = detail::finite_number(f[2]);
  const auto lat = detail::finite_number(f[3]);
  if (!ts || !lon || !lat) return std::nullopt;
  return TrajectoryRecord{f[0], *ts, *lon, *lat};
}

/// Grab-Posisi rows: trj_id,driving_mode,osname,pingtimestamp,rawlat,rawlng,speed,bearing,accuracy.
inline std::optional<TrajectoryRecord> parse_grab_row(const std::string& line) {
  const auto f = detail::split_csv(line);
  if (f.size() != 9 || f[0].empty()) return std::nullopt;
  const auto ts = detail::integer(f[3]);
  const auto lat = detail::finite_number(f[4]);
  const auto lon = detail::finite_number(f[5]);
  if (!ts || !lat || !lon) return std::nullopt;
  return TrajectoryRecord{f[0], *ts, *lon, *lat};
}

/// Reads one CSV stream. Blank lines and a Grab header line are ignored;
/// unparseable rows are counted, and more than 10% of them is an error.
inline TrajectoryBatch read_trajectories(std::istream& in, Dataset schema) {
  TrajectoryBatch batch;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (first && schema == Dataset::Grab && line.rfind("trj_id", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    ++batch.rows;
    auto rec = schema == Dataset::TDrive ? parse_tdrive_row(line) : parse_grab_row(line);
    if (rec) {
      batch.records.push_back(std::move(*rec));
    } else {
      ++batch.skipped;
      if (batch.errors.size() < 5) batch.errors.push_back(fmt::format("row {}: '{}'", batch.rows, line.substr(0, 80)));
    }
  }
  if (batch.rows > 0 && static_cast<double>(batch.skipped) > kMaxSkipFraction * static_cast<double>(batch.rows)) {
    throw FormatError(fmt::format("{} of {} rows unparseable (limit {:.0f}%)", batch.skipped, batch.rows,
                                  kMaxSkipFraction * 100));
  }
  return batch;
}

/// Equal-width bin with intervals (lo, hi]; the minimum itself goes to bin 0, so
/// a value on an interior edge lands in the lower-index bin.
inline int bin_index(double v, double lo, double hi, int bins) {
  const double width = (hi - lo) / bins;
  const double r = (v - lo) / width;
  const int idx = static_cast<int>(std::ceil(r - 1e-9)) - 1;
  return std::clamp(idx, 0, bins - 1);
}

struct IngestOptions {
  BoundingBox bbox;
  std::int64_t window_start = 0;  // epoch seconds; the window spans the scale's horizon
  double budget = -1.0;           // < 0: the scale's budget
};

struct IngestResult {
  Instance instance;
  long entities = 0;
  long dropped = 0;  // no usable fixes, too few fixes, or unreachable in the horizon
};

/// Turns trajectories into workers: the first and last in-window, in-box fix of
/// each entity give origin and destination (x from longitude, y from latitude)
/// and the slot window. Entities are ranked by fix count (then id) and the top
/// scale.workers kept, so the result does not depend on row order.
inline IngestResult ingest_trajectories(const std::vector<TrajectoryRecord>& records, const ScaleConfig& scale,
                                        const IngestOptions& opt) {
  scale.validate();
  opt.bbox.validate();
  const GridSpec grid = scale.grid();
  const std::int64_t slot_seconds = static_cast<std::int64_t>(scale.slot_minutes) * 60;
  const std::int64_t end = opt.window_start + static_cast<std::int64_t>(scale.horizon_minutes) * 60;

  std::map<std::string, std::vector<TrajectoryRecord>> by_entity;
  for (const TrajectoryRecord& r : records) by_entity[r.entity];
  for (const TrajectoryRecord& r : records) {
    if (r.timestamp < opt.window_start || r.timestamp >= end) continue;
    if (!opt.bbox.contains(r.longitude, r.latitude)) continue;
    by_entity[r.entity].push_back(r);
  }

  struct Candidate {
    std::string entity;
    std::size_t fixes;
    Worker worker;
  };
  std::vector<Candidate> kept;
  IngestResult out;
  out.entities = static_cast<long>(by_entity.size());
  for (auto& [entity, fixes] : by_entity) {
    std::sort(fixes.begin(), fixes.end());
    if (fixes.empty()) continue;
    auto cell_of = [&](const TrajectoryRecord& r) {
      return Cell{bin_index(r.longitude, opt.bbox.lon_min, opt.bbox.lon_max, grid.width),
                  bin_index(r.latitude, opt.bbox.lat_min, opt.bbox.lat_max, grid.height)};
    };
    auto slot_of = [&](const TrajectoryRecord& r) {
      return static_cast<int>(std::min<std::int64_t>((r.timestamp - opt.window_start) / slot_seconds, grid.num_slots - 1));
    };
    Worker w;
    w.origin = cell_of(fixes.front());
    w.destination = cell_of(fixes.back());
    if (w.origin == w.destination && fixes.size() < 2) continue;
    w.t_start = slot_of(fixes.front());
    const int need = std::max(1, w.transitions_for(manhattan(w.origin, w.destination)));
    w.t_end = std::max(slot_of(fixes.back()), w.t_start + need);
    if (w.t_end > grid.num_slots - 1) {
      w.t_end = grid.num_slots - 1;
      w.t_start = std::max(0, w.t_end - need);
    }
    if (w.t_start >= w.t_end || !w.reachable()) continue;
    kept.push_back({entity, fixes.size(), w});
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& a, const Candidate& b) {
    return a.fixes != b.fixes ? a.fixes > b.fixes : a.entity < b.entity;
  });
  if (kept.size() > static_cast<std::size_t>(scale.workers)) kept.resize(static_cast<std::size_t>(scale.workers));

  out.instance.grid = grid;
  out.instance.budget = opt.budget >= 0.0 ? opt.budget : scale.budget;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Worker w = kept[i].worker;
    w.id = WorkerId{static_cast<std::uint32_t>(i)};
    out.instance.workers.push_back(w);
  }
  out.dropped = out.entities - static_cast<long>(kept.size());
  out.instance.validate();
  return out;
}

}  // namespace crowdsense
