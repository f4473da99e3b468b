#pragma once

#include <string>
#include <vector>

#include "crowdsense/agents/solver.hpp"

namespace crowdsense {

struct TokenUsage {
  long prompt = 0;
  long completion = 0;

  long total() const { return prompt + completion; }
  TokenUsage& operator+=(const TokenUsage& o) {
    prompt += o.prompt;
    completion += o.completion;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

/// Side information a policy call reports back to the orchestrator.
struct PolicyInfo {
  bool fallback = false;
  TokenUsage usage;
  std::vector<std::string> notes;
};

struct SolverRequest {
  const Solution& baseline;
  const Solution& current;
  const Workspace& ws;
  const EvalReport* feedback;
  const std::vector<MetaOperation>& retrieved;
  const SolverOptions& options;
  int iteration;
};

class SolverPolicy {
 public:
  virtual ~SolverPolicy() = default;
  virtual SolverStep step(const SolverRequest& req, PolicyInfo& info) = 0;
};

class EvalPolicy {
 public:
  virtual ~EvalPolicy() = default;
  virtual EvalReport evaluate(const Solution& baseline, const Solution& candidate, const Workspace& ws,
                              PolicyInfo& info) = 0;
};

class MemoryPolicy {
 public:
  virtual ~MemoryPolicy() = default;
  virtual MetaOperation extract(const Solution& s0, const Solution& st, const Metrics& m0, const Metrics& mt,
                                const MetaContext& ctx, const Instance& pricing, PolicyInfo& info) = 0;
};

class DeterministicSolver : public SolverPolicy {
 public:
  SolverStep step(const SolverRequest& req, PolicyInfo&) override {
    return solver_step(req.current, req.ws, req.feedback, req.retrieved, req.options);
  }
};

class DeterministicEval : public EvalPolicy {
 public:
  EvalReport evaluate(const Solution& baseline, const Solution& candidate, const Workspace& ws, PolicyInfo&) override {
    return eval_report(baseline, candidate, ws);
  }
};

class DeterministicMemory : public MemoryPolicy {
 public:
  explicit DeterministicMemory(ImpactWeights weights = {}) : weights_(weights) {}

  MetaOperation extract(const Solution& s0, const Solution& st, const Metrics& m0, const Metrics& mt,
                        const MetaContext& ctx, const Instance& pricing, PolicyInfo&) override {
    return extract_meta_operation(s0, st, m0, mt, ctx, pricing, weights_);
  }

 private:
  ImpactWeights weights_;
};

struct Policies {
  SolverPolicy* solver = nullptr;
  EvalPolicy* eval = nullptr;
  MemoryPolicy* memory = nullptr;
};

/// Process-wide deterministic policy set.
inline Policies deterministic_policies() {
  static DeterministicSolver solver;
  static DeterministicEval eval;
  static DeterministicMemory memory;
  return {&solver, &eval, &memory};
}

}  // namespace crowdsense
