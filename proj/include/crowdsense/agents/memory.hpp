#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/metrics.hpp"
#include "crowdsense/disturbances/instruction.hpp"
#include "crowdsense/util/json.hpp"

namespace crowdsense {

enum class MetaOpType { AddWorker, RemoveWorker, ModifyPath, Other };

inline constexpr std::array<MetaOpType, 4> kAllMetaOpTypes = {MetaOpType::AddWorker, MetaOpType::RemoveWorker,
                                                              MetaOpType::ModifyPath, MetaOpType::Other};

inline const char* to_string(MetaOpType t) {
  switch (t) {
    case MetaOpType::AddWorker: return "add_worker";
    case MetaOpType::RemoveWorker: return "remove_worker";
    case MetaOpType::ModifyPath: return "modify_path";
    case MetaOpType::Other: return "other";
  }
  return "?";
}

inline MetaOpType meta_op_from_string(std::string_view s) {
  for (MetaOpType t : kAllMetaOpTypes) {
    if (s == to_string(t)) return t;
  }
  throw FormatError("unknown operation type '" + std::string(s) + "'");
}

struct MetaContext {
  DisturbanceType disturbance = DisturbanceType::ContinueOptimize;
  double budget = 0.0;
  double centroid_x = 0.5;  // normalised to [0, 1]
  double centroid_y = 0.5;

  bool operator==(const MetaContext&) const = default;
};

struct MetaOperation {
  MetaOpType op_type = MetaOpType::Other;
  std::string details;
  MetaContext context;
  MetricsDelta metric_gap;  // final minus baseline metrics of the analysed pair
  double impact = 0.0;
  std::uint64_t sequence = 0;  // set by the store; larger is newer

  bool operator==(const MetaOperation&) const = default;
};

/// Weights of the impact score over normalised metric changes.
struct ImpactWeights {
  double covered = 0.25;
  double entropy = 0.5;
  double objective = 1.0;
  double cost = -0.25;
};

namespace detail {

/// Change relative to the baseline magnitude (at least 1); non-finite changes
/// count as a full unit in their direction.
inline double relative(double change, double base) {
  if (std::isnan(change)) return 0.0;
  if (std::isinf(change)) return change > 0 ? 1.0 : -1.0;
  const double scale = std::isfinite(base) ? std::max(std::abs(base), 1.0) : 1.0;
  return change / scale;
}

}  // namespace detail

inline double impact_score(const MetricsDelta& d, const Metrics& base, const ImpactWeights& w = {}) {
  return w.covered * detail::relative(d.d_covered, static_cast<double>(base.covered_count)) +
         w.entropy * detail::relative(d.d_entropy, base.entropy) +
         w.objective * detail::relative(d.d_objective, base.objective_value) +
         w.cost * detail::relative(d.d_cost, base.cost);
}

/// One worker-level difference between two solutions.
struct SolutionDiffOp {
  MetaOpType type = MetaOpType::Other;
  WorkerId worker{};
};

inline std::vector<SolutionDiffOp> diff_solutions(const Solution& s0, const Solution& st) {
  std::vector<SolutionDiffOp> ops;
  for (const auto& [id, path] : st.assignments) {
    auto it = s0.assignments.find(id);
    if (it == s0.assignments.end()) {
      ops.push_back({MetaOpType::AddWorker, id});
    } else if (it->second != path) {
      ops.push_back({MetaOpType::ModifyPath, id});
    }
  }
  for (const auto& [id, path] : s0.assignments) {
    if (!st.contains(id)) ops.push_back({MetaOpType::RemoveWorker, id});
  }
  return ops;
}

/// s0 with only `op` taken from st.
inline Solution replay_one(Solution s0, const Solution& st, const SolutionDiffOp& op) {
  if (op.type == MetaOpType::RemoveWorker) {
    s0.assignments.erase(op.worker);
  } else {
    s0.assignments[op.worker] = st.assignments.at(op.worker);
  }
  return s0;
}

/// Mean position of the cells an operation touches, scaled to [0, 1].
inline std::pair<double, double> op_centroid(const Solution& s0, const Solution& st, const SolutionDiffOp& op,
                                             const GridSpec& grid) {
  std::vector<Cell> cells;
  auto before = s0.assignments.find(op.worker);
  auto after = st.assignments.find(op.worker);
  auto take = [&](const Path& from, const Path* other) {
    for (const Step& s : from.steps) {
      if (other == nullptr || !other->visits(s.cell())) cells.push_back(s.cell());
    }
  };
  const Path* b = before == s0.assignments.end() ? nullptr : &before->second;
  const Path* a = after == st.assignments.end() ? nullptr : &after->second;
  if (a) take(*a, b);
  if (b) take(*b, a);
  if (cells.empty()) return {0.5, 0.5};
  double sx = 0.0, sy = 0.0;
  for (Cell c : cells) {
    sx += c.x;
    sy += c.y;
  }
  const double n = static_cast<double>(cells.size());
  auto scale = [](double v, int extent) { return extent > 1 ? v / (extent - 1) : 0.5; };
  return {scale(sx / n, grid.width), scale(sy / n, grid.height)};
}

/// Diffs a refinement's start and current solutions and returns the single
/// operation that best explains the change. Up to `replay_limit` worker-level
/// differences are scored by replaying each alone on s0; larger diffs take the
/// most frequent kind of difference and score the whole change. `instance`
/// prices paths and must know every worker in either solution.
inline MetaOperation extract_meta_operation(const Solution& s0, const Solution& st, const Metrics& m0,
                                            const Metrics& mt, MetaContext ctx, const Instance& instance,
                                            const ImpactWeights& weights = {}, std::size_t replay_limit = 4) {
  MetaOperation out;
  out.metric_gap = metrics_delta(m0, mt);
  const std::vector<SolutionDiffOp> ops = diff_solutions(s0, st);
  if (ops.empty()) {
    out.op_type = MetaOpType::Other;
    out.context = ctx;
    out.details = fmt::format("no change under {}", to_string(ctx.disturbance));
    out.impact = 0.0;
    return out;
  }
  std::size_t chosen = 0;
  if (ops.size() <= replay_limit) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const Metrics mi = compute_metrics(replay_one(s0, st, ops[i]), instance);
      const double phi = impact_score(metrics_delta(m0, mi), m0, weights);
      if (phi > best) {
        best = phi;
        chosen = i;
      }
    }
    out.impact = best;
  } else {
    std::array<int, 4> counts{};
    for (const SolutionDiffOp& op : ops) ++counts[static_cast<std::size_t>(op.type)];
    std::size_t kind = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
      if (counts[k] > counts[kind]) kind = k;
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (static_cast<std::size_t>(ops[i].type) == kind) {
        chosen = i;
        break;
      }
    }
    out.impact = impact_score(out.metric_gap, m0, weights);
  }
  if (!std::isfinite(out.impact)) out.impact = 0.0;
  const SolutionDiffOp& op = ops[chosen];
  out.op_type = op.type;
  std::tie(ctx.centroid_x, ctx.centroid_y) = op_centroid(s0, st, op, instance.grid);
  out.context = ctx;
  out.details = fmt::format("{} worker {} (largest of {} worker changes): dJ {:+.4f}, dE {:+.4f}, covered {:+g}, cost {:+g}",
                            to_string(op.type), to_string(op.worker), ops.size(), out.metric_gap.d_objective,
                            out.metric_gap.d_entropy, out.metric_gap.d_covered, out.metric_gap.d_cost);
  return out;
}

/// What the solver is about to try, for retrieval.
struct MemoryQuery {
  std::vector<MetaOpType> candidates;
  DisturbanceType disturbance = DisturbanceType::ContinueOptimize;
  double centroid_x = 0.5;
  double centroid_y = 0.5;
  std::array<double, 4> signs{1.0, 1.0, 1.0, 0.0};  // wanted direction of covered, entropy, objective, cost
};

using MemoryFeatures = std::array<double, 18>;

inline double sign_of(double v) {
  if (std::isnan(v) || v == 0.0) return 0.0;
  return v > 0.0 ? 1.0 : -1.0;
}

/// op one-hot (4) | disturbance one-hot (8) | centroid (2) | metric-change signs (4)
inline MemoryFeatures memory_features(std::optional<MetaOpType> op, DisturbanceType disturbance, double cx, double cy,
                                      const std::array<double, 4>& signs) {
  MemoryFeatures f{};
  if (op) f[static_cast<std::size_t>(*op)] = 1.0;
  f[4 + type_index(disturbance)] = 1.0;
  f[12] = cx;
  f[13] = cy;
  for (std::size_t i = 0; i < 4; ++i) f[14 + i] = signs[i];
  return f;
}

inline MemoryFeatures memory_features(const MetaOperation& m) {
  const MetricsDelta& d = m.metric_gap;
  return memory_features(m.op_type, m.context.disturbance, m.context.centroid_x, m.context.centroid_y,
                         {sign_of(d.d_covered), sign_of(d.d_entropy), sign_of(d.d_objective), sign_of(d.d_cost)});
}

inline double cosine(const MemoryFeatures& a, const MemoryFeatures& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Best cosine between the entry and the query over the query's candidate op types.
inline double similarity(const MemoryQuery& q, const MetaOperation& m) {
  const MemoryFeatures target = memory_features(m);
  if (q.candidates.empty()) {
    return cosine(memory_features(std::nullopt, q.disturbance, q.centroid_x, q.centroid_y, q.signs), target);
  }
  double best = -1.0;
  for (MetaOpType op : q.candidates) {
    best = std::max(best, cosine(memory_features(op, q.disturbance, q.centroid_x, q.centroid_y, q.signs), target));
  }
  return best;
}

inline json to_json(const MetricsDelta& d) {
  return {{"d_covered", finite_or_tag(d.d_covered)},
          {"d_entropy", finite_or_tag(d.d_entropy)},
          {"d_objective", finite_or_tag(d.d_objective)},
          {"d_cost", finite_or_tag(d.d_cost)}};
}

inline MetricsDelta metrics_delta_from_json(const json& j) {
  return {number_or_tag(j.at("d_covered")), number_or_tag(j.at("d_entropy")), number_or_tag(j.at("d_objective")),
          number_or_tag(j.at("d_cost"))};
}

inline json to_json(const MetaOperation& m) {
  return {{"op_type", to_string(m.op_type)},
          {"details", m.details},
          {"context",
           {{"disturbance", to_string(m.context.disturbance)},
            {"budget", m.context.budget},
            {"centroid", {m.context.centroid_x, m.context.centroid_y}}}},
          {"metric_gap", to_json(m.metric_gap)},
          {"impact", m.impact},
          {"sequence", m.sequence}};
}

inline MetaOperation meta_operation_from_json(const json& j) {
  try {
    MetaOperation m;
    m.op_type = meta_op_from_string(j.at("op_type").get<std::string>());
    m.details = j.at("details").get<std::string>();
    const json& c = j.at("context");
    m.context.disturbance = disturbance_type_from_string(c.at("disturbance").get<std::string>());
    m.context.budget = c.at("budget").get<double>();
    m.context.centroid_x = c.at("centroid").at(0).get<double>();
    m.context.centroid_y = c.at("centroid").at(1).get<double>();
    m.metric_gap = metrics_delta_from_json(j.at("metric_gap"));
    m.impact = j.at("impact").get<double>();
    m.sequence = j.value("sequence", std::uint64_t{0});
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("meta-operation: ") + e.what());
  }
}

/// Bounded, thread-safe store of meta-operations. Readers share the lock;
/// appends are serialised. When full, the oldest entry is evicted.
class MemoryStore {
 public:
  explicit MemoryStore(std::size_t capacity = 256) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  MemoryStore(const MemoryStore&) = delete;
  MemoryStore& operator=(const MemoryStore&) = delete;

  /// Stores `m` unless an entry with the same kind, details and disturbance
  /// exists. Returns whether it was stored.
  bool append(MetaOperation m) {
    std::unique_lock lock(mutex_);
    for (const MetaOperation& e : entries_) {
      if (e.op_type == m.op_type && e.details == m.details && e.context.disturbance == m.context.disturbance) {
        return false;
      }
    }
    m.sequence = ++last_sequence_;
    entries_.push_back(std::move(m));
    while (entries_.size() > capacity_) entries_.pop_front();
    return true;
  }

  std::vector<MetaOperation> entries() const {
    std::shared_lock lock(mutex_);
    return {entries_.begin(), entries_.end()};
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  std::size_t capacity() const { return capacity_; }

  void clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
  }

  /// Top-k entries by similarity to `q`, ties broken newest first.
  std::vector<MetaOperation> retrieve(const MemoryQuery& q, std::size_t k) const {
    if (k < 1) throw DomainError("retrieve needs k >= 1");
    std::vector<std::pair<double, MetaOperation>> scored;
    {
      std::shared_lock lock(mutex_);
      for (const MetaOperation& e : entries_) scored.emplace_back(similarity(q, e), e);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second.sequence > b.second.sequence;
    });
    std::vector<MetaOperation> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(std::move(scored[i].second));
    return out;
  }

  /// One JSON object per line, oldest first.
  std::string to_jsonl() const {
    std::shared_lock lock(mutex_);
    std::string out;
    for (const MetaOperation& e : entries_) out += to_json(e).dump() + "\n";
    return out;
  }

  void save(const std::string& path) const { write_text_file(path, to_jsonl()); }

  /// Replaces the contents with the entries in a JSONL file, keeping their sequence numbers.
  void load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::deque<MetaOperation> loaded;
    std::uint64_t last = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw FormatError(path + ": bad JSON line");
      loaded.push_back(meta_operation_from_json(j));
      last = std::max(last, loaded.back().sequence);
    }
    std::unique_lock lock(mutex_);
    entries_ = std::move(loaded);
    while (entries_.size() > capacity_) entries_.pop_front();
    last_sequence_ = last;
  }

 private:
  std::size_t capacity_;
  std::deque<MetaOperation> entries_;
  std::uint64_t last_sequence_ = 0;
  mutable std::shared_mutex mutex_;
};

}  // namespace crowdsense
