#pragma once

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/agents/memory.hpp"
#include "crowdsense/grid/io.hpp"

namespace crowdsense {

enum class OutputKind { Solver, Eval, Memory };

inline const char* to_string(OutputKind k) {
  switch (k) {
    case OutputKind::Solver: return "solver";
    case OutputKind::Eval: return "eval";
    case OutputKind::Memory: return "memory";
  }
  return "?";
}

struct SolverOutput {
  std::string think_process;
  Solution refined_solution;
};

struct EvalOutput {
  std::string eval_summary;
  std::string advice;
};

struct MemoryOutput {
  MetaOpType operation_type = MetaOpType::Other;
  std::string operation_details;
};

using StructuredOutput = std::variant<SolverOutput, EvalOutput, MemoryOutput>;

struct FieldError {
  std::string field;
  std::string message;
};

struct ParseError {
  std::string message;
  std::string span;  // offending text, clipped to 200 bytes
  std::vector<FieldError> fields;

  std::string describe() const {
    std::string out = message;
    for (const FieldError& f : fields) out += fmt::format("; {}: {}", f.field, f.message);
    return out;
  }
};

struct ParseResult {
  std::optional<StructuredOutput> output;
  ParseError error;

  bool ok() const { return output.has_value(); }
};

/// A model asking to run one of the local tools instead of answering.
struct ToolCall {
  std::string name;
  json arguments = json::object();
};

inline constexpr std::size_t kThinkWordLimit = 200;
inline constexpr std::size_t kMaxObjectCandidates = 64;

namespace detail {

struct JsonCandidate {
  json value;
  std::size_t begin = 0;
  std::size_t length = 0;
};

/// End index (exclusive) of the brace-balanced region starting at `open`, or npos.
inline std::size_t balanced_end(const std::string& text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

/// Every top-level JSON object embedded in `text`, in order of appearance.
inline std::vector<JsonCandidate> json_objects(const std::string& text) {
  std::vector<JsonCandidate> out;
  std::size_t pos = text.find('{');
  while (pos != std::string::npos && out.size() < kMaxObjectCandidates) {
    const std::size_t end = balanced_end(text, pos);
    if (end != std::string::npos) {
      json doc = json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                             text.begin() + static_cast<std::ptrdiff_t>(end), nullptr, false);
      if (!doc.is_discarded() && doc.is_object()) {
        out.push_back({std::move(doc), pos, end - pos});
        pos = text.find('{', end);
        continue;
      }
    }
    pos = text.find('{', pos + 1);
  }
  return out;
}

inline std::string clip(const std::string& text, std::size_t begin, std::size_t length) {
  return text.substr(begin, std::min<std::size_t>(length, 200));
}

inline std::size_t word_count(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

inline std::optional<MetaOpType> meta_op_from_text(std::string s) {
  for (char& c : s) c = c == ' ' || c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "add_worker") return MetaOpType::AddWorker;
  if (s == "remove_worker") return MetaOpType::RemoveWorker;
  if (s == "modify_path") return MetaOpType::ModifyPath;
  if (s == "other") return MetaOpType::Other;
  return std::nullopt;
}

inline void require_string(const json& obj, const char* key, std::vector<FieldError>& errors) {
  if (!obj.contains(key)) errors.push_back({key, "missing"});
  else if (!obj[key].is_string()) errors.push_back({key, "must be a string"});
}

inline std::optional<Solution> solution_fields(const json& j, const GridSpec* grid, std::vector<FieldError>& errors) {
  if (!j.is_object()) {
    errors.push_back({"refined_solution", "must be an object keyed by worker id"});
    return std::nullopt;
  }
  Solution s;
  const std::size_t before = errors.size();
  for (const auto& [key, value] : j.items()) {
    const std::string field = "refined_solution[\"" + key + "\"]";
    WorkerId id{};
    try {
      id = parse_worker_id(key);
    } catch (const FormatError&) {
      errors.push_back({field, "worker id is not a non-negative integer"});
      continue;
    }
    if (!value.is_array() || value.empty()) {
      errors.push_back({field, "must be a non-empty list of [x, y, t]"});
      continue;
    }
    Path path;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const json& st = value[i];
      const std::string at = fmt::format("{}[{}]", field, i);
      bool ints = st.is_array() && st.size() == 3;
      for (std::size_t k = 0; ints && k < 3; ++k) {
        ints = st[k].is_number_integer() && st[k].get<long long>() >= -1'000'000 && st[k].get<long long>() <= 1'000'000;
      }
      if (!ints) {
        errors.push_back({at, "step must be [x, y, t] with integer entries"});
        continue;
      }
      const Step step{st[0].get<int>(), st[1].get<int>(), st[2].get<int>()};
      if (grid && !grid->contains(step)) {
        errors.push_back({at, fmt::format("({}, {}, {}) lies outside the {}x{}x{} grid", step.x, step.y, step.t,
                                          grid->width, grid->height, grid->num_slots)});
        continue;
      }
      path.steps.push_back(step);
    }
    s.assignments[id] = std::move(path);
  }
  if (errors.size() != before) return std::nullopt;
  return s;
}

/// Schema check of one object for `kind`; returns nullopt with field errors on mismatch.
inline std::optional<StructuredOutput> match_schema(const json& obj, OutputKind kind, const GridSpec* grid,
                                                    std::vector<FieldError>& errors) {
  switch (kind) {
    case OutputKind::Solver: {
      require_string(obj, "think_process", errors);
      if (!obj.contains("refined_solution")) errors.push_back({"refined_solution", "missing"});
      if (obj.contains("think_process") && obj["think_process"].is_string() &&
          word_count(obj["think_process"].get<std::string>()) > kThinkWordLimit) {
        errors.push_back({"think_process", fmt::format("longer than {} words", kThinkWordLimit)});
      }
      std::optional<Solution> sol;
      if (obj.contains("refined_solution")) sol = solution_fields(obj["refined_solution"], grid, errors);
      if (!errors.empty() || !sol) return std::nullopt;
      return SolverOutput{obj["think_process"].get<std::string>(), std::move(*sol)};
    }
    case OutputKind::Eval:
      require_string(obj, "eval_summary", errors);
      require_string(obj, "advice", errors);
      if (!errors.empty()) return std::nullopt;
      return EvalOutput{obj["eval_summary"].get<std::string>(), obj["advice"].get<std::string>()};
    case OutputKind::Memory: {
      require_string(obj, "operation_type", errors);
      require_string(obj, "operation_details", errors);
      std::optional<MetaOpType> op;
      if (obj.contains("operation_type") && obj["operation_type"].is_string()) {
        op = meta_op_from_text(obj["operation_type"].get<std::string>());
        if (!op) errors.push_back({"operation_type", "must be add_worker, remove_worker, modify_path or other"});
      }
      if (!errors.empty()) return std::nullopt;
      return MemoryOutput{*op, obj["operation_details"].get<std::string>()};
    }
  }
  return std::nullopt;
}

inline bool mentions_schema(const json& obj, OutputKind kind) {
  switch (kind) {
    case OutputKind::Solver: return obj.contains("refined_solution") || obj.contains("think_process");
    case OutputKind::Eval: return obj.contains("eval_summary") || obj.contains("advice");
    case OutputKind::Memory: return obj.contains("operation_type") || obj.contains("operation_details");
  }
  return false;
}

}  // namespace detail

/// First embedded JSON object that satisfies the `kind` schema. Never throws:
/// failures come back as a ParseError with the offending span and field errors.
/// With `grid`, solution steps outside it are rejected.
inline ParseResult parse_structured(const std::string& text, OutputKind kind, const GridSpec* grid = nullptr) noexcept {
  ParseResult result;
  try {
    const auto candidates = detail::json_objects(text);
    std::optional<ParseError> first_mismatch;
    for (const auto& c : candidates) {
      std::vector<FieldError> errors;
      if (auto out = detail::match_schema(c.value, kind, grid, errors)) {
        result.output = std::move(out);
        return result;
      }
      // Objects that do not even name a schema field are prose examples; keep looking.
      if (!first_mismatch && detail::mentions_schema(c.value, kind)) {
        first_mismatch = ParseError{fmt::format("{} output does not match the schema", to_string(kind)),
                                    detail::clip(text, c.begin, c.length), std::move(errors)};
      }
    }
    if (first_mismatch) result.error = std::move(*first_mismatch);
    else if (!candidates.empty()) {
      result.error = {fmt::format("no JSON object carries the {} output fields", to_string(kind)),
                      detail::clip(text, candidates.front().begin, candidates.front().length), {}};
    } else {
      result.error = {"no parseable JSON object in reply", detail::clip(text, 0, text.size()), {}};
    }
  } catch (const std::exception& e) {
    result.output.reset();
    result.error = {std::string("parser failure: ") + e.what(), {}, {}};
  }
  return result;
}

/// A {"tool": name, "arguments": {...}} request, when that is the first object in the reply.
inline std::optional<ToolCall> parse_tool_call(const std::string& text) noexcept {
  try {
    for (const auto& c : detail::json_objects(text)) {
      if (!c.value.contains("tool") || !c.value["tool"].is_string()) return std::nullopt;
      ToolCall call{c.value["tool"].get<std::string>(), json::object()};
      if (c.value.contains("arguments") && c.value["arguments"].is_object()) call.arguments = c.value["arguments"];
      return call;
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace crowdsense
