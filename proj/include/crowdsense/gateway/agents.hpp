#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "crowdsense/gateway/parse.hpp"
#include "crowdsense/gateway/prompts.hpp"

namespace crowdsense {

/// Runs `attempt` up to 1 + max_retries times. A parse or verification failure
/// (nullopt) is retried; a transport error means the client already spent its
/// own retries, so it goes straight to `fallback`. Either way info.fallback is set.
template <class T>
T with_fallback(int max_retries, const std::function<std::optional<T>(int attempt)>& attempt,
                const std::function<T()>& fallback, PolicyInfo& info) {
  for (int i = 0; i <= std::max(max_retries, 0); ++i) {
    try {
      if (auto out = attempt(i)) return std::move(*out);
    } catch (const GatewayError& e) {
      info.notes.push_back(std::string("gateway error: ") + e.what());
      break;
    }
  }
  info.fallback = true;
  return fallback();
}

/// One model exchange, including local tool rounds. Returns the parsed output or
/// nullopt with the reason appended to `info.notes`; `correction` is extra user
/// text describing what was wrong with the previous answer.
struct Conversation {
  ChatClient& client;
  const GatewayConfig& config;
  std::string system;
  json tools = json::array();
  std::function<json(const ToolCall&)> run;

  std::optional<StructuredOutput> ask(const std::string& user, OutputKind kind, const GridSpec* grid,
                                      const std::string& correction, PolicyInfo& info) const {
    ChatRequest req;
    req.system = system;
    req.tools = tools;
    req.temperature = config.temperature;
    req.max_tokens = config.max_tokens;
    req.messages.push_back({"user", user});
    if (!correction.empty()) req.messages.push_back({"user", correction});
    for (int round = 0;; ++round) {
      ChatResponse resp = client.complete(req);
      info.usage += resp.usage;
      for (std::string& line : resp.log) info.notes.push_back(std::move(line));
      ParseResult parsed = parse_structured(resp.text, kind, grid);
      if (parsed.ok()) return std::move(parsed.output);
      auto call = parse_tool_call(resp.text);
      if (call && run && round < config.max_tool_rounds) {
        req.messages.push_back({"assistant", resp.text});
        req.messages.push_back({"tool", fmt::format("Result of {}: {}", call->name,
                                                     run(*call).dump(-1, ' ', false, json::error_handler_t::replace))});
        continue;
      }
      info.notes.push_back(fmt::format("{} reply rejected: {}", to_string(kind), parsed.error.describe()));
      return std::nullopt;
    }
  }
};

inline std::string correction_for(const PolicyInfo& info) {
  if (info.notes.empty()) return {};
  return "Your previous answer could not be used (" + info.notes.back() +
         "). Reply again with a single JSON object in the requested format.";
}

/// Solver backed by an external model. The proposal is turned into edits that
/// are applied one by one and verified; the batch is kept only if it repairs
/// something or raises the score without adding violations.
class LlmSolver : public SolverPolicy {
 public:
  LlmSolver(ChatClient& client, GatewayConfig config) : client_(client), config_(std::move(config)) {}

  SolverStep step(const SolverRequest& req, PolicyInfo& info) override {
    Conversation conv{client_, config_, solver_system_prompt(), solver_tool_schemas(),
                      [&](const ToolCall& c) { return run_tool(c.name, c.arguments, req.current, req.baseline, req.ws); }};
    const std::string user = solver_user_prompt(req, config_.max_path_listing);
    std::size_t shown = 0;
    solution_listing(req.current, config_.max_path_listing, &shown);

    std::function<std::optional<SolverStep>(int)> attempt = [&](int k) -> std::optional<SolverStep> {
      auto out = conv.ask(user, OutputKind::Solver, &req.ws.effective.grid, k > 0 ? correction_for(info) : std::string(), info);
      if (!out) return std::nullopt;
      const auto& so = std::get<SolverOutput>(*out);
      Solution proposed = so.refined_solution;
      // Workers cut from the listing were never shown, so the model cannot be asked to drop them.
      std::size_t i = 0;
      for (const auto& [id, path] : req.current.assignments) {
        if (i++ >= shown && !proposed.contains(id)) proposed.assignments[id] = path;
      }
      return verify(req, proposed, so.think_process, info);
    };
    std::function<SolverStep()> fallback = [&] {
      return solver_step(req.current, req.ws, req.feedback, req.retrieved, req.options);
    };
    return with_fallback(config_.max_retries, attempt, fallback, info);
  }

 private:
  std::optional<SolverStep> verify(const SolverRequest& req, const Solution& proposed, const std::string& think,
                                   PolicyInfo& info) const {
    SolverStep out;
    out.solution = req.current;
    const Assessment start = assess(req.current, req.ws);
    Assessment now = start;
    std::vector<std::string> lines{"model: " + think};
    const std::vector<Edit> edits = edits_between(req.current, proposed);
    if (edits.empty()) {
      out.explanation = "model: " + think + "\nno-op: the proposal repeats the current plan";
      return out;
    }
    for (const Edit& e : edits) {
      if (static_cast<int>(out.edits.size()) >= req.options.batch_max) {
        out.rejected.push_back(e.describe() + ": over the batch limit");
        continue;
      }
      auto trial = detail::try_edit(out.solution, req.ws, e);
      if (!trial) {
        out.rejected.push_back(e.describe() + ": does not apply");
        continue;
      }
      if (!trial->assessment.health.no_worse_than(start.health)) {
        out.rejected.push_back(e.describe() + ": " + detail::verdict(now, trial->assessment));
        continue;
      }
      lines.push_back(fmt::format("{}. {} [model]: {}", out.edits.size() + 1, e.describe(),
                                  detail::verdict(now, trial->assessment)));
      out.edits.push_back(e);
      out.solution = std::move(trial->after);
      now = std::move(trial->assessment);
    }
    const bool repaired = now.health.better_than(start.health);
    if (out.edits.empty() || (!repaired && !detail::improves(now, start))) {
      info.notes.push_back(fmt::format("proposal rejected after verification: {}", detail::verdict(start, now)));
      return std::nullopt;
    }
    out.explanation = fmt::format("{}", fmt::join(lines, "\n"));
    return out;
  }

  ChatClient& client_;
  GatewayConfig config_;
};

/// Metrics, handling and heatmaps are always measured locally; the model only
/// writes the summary and advice.
class LlmEval : public EvalPolicy {
 public:
  LlmEval(ChatClient& client, GatewayConfig config) : client_(client), config_(std::move(config)) {}

  EvalReport evaluate(const Solution& baseline, const Solution& candidate, const Workspace& ws,
                      PolicyInfo& info) override {
    EvalReport report = eval_report(baseline, candidate, ws);
    Conversation conv{client_, config_, eval_system_prompt(), eval_tool_schemas(),
                      [&](const ToolCall& c) { return run_tool(c.name, c.arguments, candidate, baseline, ws); }};
    const std::string user = eval_user_prompt(report, baseline, candidate, config_.max_path_listing);
    std::function<std::optional<EvalReport>(int)> attempt = [&](int k) -> std::optional<EvalReport> {
      auto out = conv.ask(user, OutputKind::Eval, nullptr, k > 0 ? correction_for(info) : std::string(), info);
      if (!out) return std::nullopt;
      EvalReport r = report;
      r.summary = std::get<EvalOutput>(*out).eval_summary;
      r.advice = std::get<EvalOutput>(*out).advice;
      return r;
    };
    std::function<EvalReport()> fallback = [&] { return report; };
    return with_fallback(config_.max_retries, attempt, fallback, info);
  }

 private:
  ChatClient& client_;
  GatewayConfig config_;
};

/// The metric gap and impact come from the local diff; the model names the
/// operation and describes it.
class LlmMemory : public MemoryPolicy {
 public:
  LlmMemory(ChatClient& client, GatewayConfig config, ImpactWeights weights = {})
      : client_(client), config_(std::move(config)), weights_(weights) {}

  MetaOperation extract(const Solution& s0, const Solution& st, const Metrics& m0, const Metrics& mt,
                        const MetaContext& ctx, const Instance& pricing, PolicyInfo& info) override {
    const MetaOperation local = extract_meta_operation(s0, st, m0, mt, ctx, pricing, weights_);
    Conversation conv{client_, config_, memory_system_prompt(), json::array(), nullptr};
    const std::string user = memory_user_prompt(s0, st, m0, mt, ctx, config_.max_path_listing);
    std::function<std::optional<MetaOperation>(int)> attempt = [&](int k) -> std::optional<MetaOperation> {
      auto out = conv.ask(user, OutputKind::Memory, nullptr, k > 0 ? correction_for(info) : std::string(), info);
      if (!out) return std::nullopt;
      MetaOperation m = local;
      m.op_type = std::get<MemoryOutput>(*out).operation_type;
      m.details = std::get<MemoryOutput>(*out).operation_details;
      return m;
    };
    std::function<MetaOperation()> fallback = [&] { return local; };
    return with_fallback(config_.max_retries, attempt, fallback, info);
  }

 private:
  ChatClient& client_;
  GatewayConfig config_;
  ImpactWeights weights_;
};

/// Owns the three model-backed policies over one client.
class LlmPolicySet {
 public:
  LlmPolicySet(ChatClient& client, const GatewayConfig& config)
      : solver_(client, config), eval_(client, config), memory_(client, config) {}

  Policies policies() { return {&solver_, &eval_, &memory_}; }

 private:
  LlmSolver solver_;
  LlmEval eval_;
  LlmMemory memory_;
};

}  // namespace crowdsense
