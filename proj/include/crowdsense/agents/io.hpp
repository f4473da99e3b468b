#pragma once

#include <filesystem>
#include <string>

#include "crowdsense/agents/refinement.hpp"
#include "crowdsense/coverage/io.hpp"
#include "crowdsense/disturbances/io.hpp"

namespace crowdsense {

inline json to_json(const Metrics& m) {
  return {{"covered_count", m.covered_count},
          {"entropy", m.entropy},
          {"objective_value", finite_or_tag(m.objective_value)},
          {"cost", m.cost}};
}

inline Metrics metrics_from_json(const json& j) {
  try {
    return {j.at("covered_count").get<long>(), j.at("entropy").get<double>(), number_or_tag(j.at("objective_value")),
            j.at("cost").get<double>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics: ") + e.what());
  }
}

inline json to_json(const Suggestion& s) {
  return {{"edit", to_json(s.edit)}, {"rationale", s.rationale}, {"estimated_gain", s.estimated_gain}};
}

inline json to_json(const TokenUsage& u) {
  return {{"prompt", u.prompt}, {"completion", u.completion}, {"total", u.total()}};
}

inline json to_json(const EvalReport& r) {
  json suggestions = json::array();
  for (const Suggestion& s : r.suggestions) suggestions.push_back(to_json(s));
  json regions = json::array();
  for (const Region& g : r.low_regions) {
    regions.push_back({{"name", g.name}, {"x", {g.x0, g.x1}}, {"y", {g.y0, g.y1}}, {"visits", g.visits},
                       {"change", g.change}});
  }
  return {{"baseline_metrics", to_json(r.baseline_metrics)},
          {"metrics", to_json(r.metrics)},
          {"delta", to_json(r.delta)},
          {"handling", to_json(r.handling)},
          {"validation", to_json(r.validation)},
          {"low_regions", regions},
          {"suggestions", suggestions},
          {"summary", r.summary},
          {"advice", r.advice}};
}

/// One trace line. Heatmaps are exported separately.
inline json to_json(const IterationRecord& r) {
  json edits = json::array();
  for (const Edit& e : r.edits) edits.push_back(to_json(e));
  json suggestions = json::array();
  for (const Suggestion& s : r.suggestions) suggestions.push_back(to_json(s));
  json retrieved = json::array();
  for (const MetaOperation& m : r.retrieved) retrieved.push_back(to_json(m));
  return {{"iter", r.iter},
          {"solution", to_json(r.solution)},
          {"metrics", to_json(r.metrics)},
          {"handling", to_json(r.handling)},
          {"validation", to_json(r.validation)},
          {"edits", edits},
          {"rejected", r.rejected},
          {"explanation", r.explanation},
          {"feasible", r.feasible},
          {"success", r.success},
          {"excursion", r.excursion},
          {"tags", r.tags},
          {"tokens", to_json(r.tokens)},
          {"eval_summary", r.eval_summary},
          {"advice", r.advice},
          {"suggestions", suggestions},
          {"meta_operation", r.meta ? to_json(*r.meta) : json(nullptr)},
          {"retrieved", retrieved}};
}

inline std::string trace_jsonl(const RefinementTrace& t) {
  std::string out;
  for (const IterationRecord& r : t.iterations) out += to_json(r).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  return out;
}

inline json trace_summary(const RefinementTrace& t) {
  return {{"instruction", to_json(t.instruction)},
          {"baseline", to_json(t.baseline)},
          {"baseline_metrics", to_json(t.baseline_metrics)},
          {"final", to_json(t.final)},
          {"final_metrics", to_json(t.final_metrics)},
          {"success", t.success},
          {"iterations_used", t.iterations_used},
          {"iterations_run", t.iterations.size()},
          {"tokens", to_json(t.tokens)}};
}

/// Writes <prefix>_{baseline,candidate,diff}.pgm and <prefix>.json.
inline void write_heatmaps(const std::filesystem::path& dir, const std::string& prefix, const Heatmaps& h) {
  std::filesystem::create_directories(dir);
  write_text_file((dir / (prefix + "_baseline.pgm")).string(), to_pgm(h.baseline));
  write_text_file((dir / (prefix + "_candidate.pgm")).string(), to_pgm(h.candidate));
  write_text_file((dir / (prefix + "_diff.pgm")).string(), to_pgm(h.diff, true));
  write_json_file((dir / (prefix + ".json")).string(), to_json(h));
}

}  // namespace crowdsense
