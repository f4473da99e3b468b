#pragma once

#include "crowdsense/planners/annealing.hpp"
#include "crowdsense/planners/graphdp.hpp"
#include "crowdsense/planners/insertion.hpp"

namespace crowdsense {

inline PlanResult plan(const PlanningProblem& problem, const PlannerConfig& config) {
  config.validate();
  std::vector<std::string> log;
  log.push_back(fmt::format("{} seed {} on {}x{}x{}, {} candidates, budget {:g}", to_string(config.algorithm),
                            config.seed, problem.grid.width, problem.grid.height, problem.grid.num_slots,
                            problem.workers.size(), problem.budget));
  Solution solution;
  switch (config.algorithm) {
    case Algorithm::RN: {
      Rng rng(config.seed);
      solution = random_insertion(problem, rng, log).solution();
      break;
    }
    case Algorithm::TVPG:
      solution = greedy_insertion(problem, false, log).solution();
      break;
    case Algorithm::TCPG:
      solution = greedy_insertion(problem, true, log).solution();
      break;
    case Algorithm::MSA:
    case Algorithm::MSAGI: {
      std::optional<RoutePlan> greedy;
      if (config.algorithm == Algorithm::MSAGI) {
        std::vector<std::string> greedy_log;
        greedy = greedy_insertion(problem, false, greedy_log);
        log.push_back(fmt::format("greedy start: {} insertions", greedy_log.size()));
      }
      std::optional<RoutePlan> best;
      double best_j = -std::numeric_limits<double>::infinity();
      for (int r = 0; r < config.sa.restarts; ++r) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
        RoutePlan start;
        if (greedy) {
          start = *greedy;
        } else {
          std::vector<std::string> start_log;
          start = random_insertion(problem, rng, start_log);
        }
        RoutePlan result = anneal(problem, std::move(start), config.sa, rng, log, r);
        CoverageState state(problem.grid, problem.objective);
        for (const auto& [id, path] : result.paths) state.add(path);
        const double j = state.objective();
        if (!best || j > best_j + 1e-12) {
          best_j = j;
          best = std::move(result);
        }
      }
      solution = best->solution();
      break;
    }
    case Algorithm::GraphDP:
      solution = graphdp_plan(problem, config.graphdp, log);
      break;
  }
  return finish_plan(problem, config.algorithm, std::move(solution), std::move(log));
}

inline PlanResult plan(const Instance& instance, const PlannerConfig& config) {
  instance.validate();
  return plan(PlanningProblem::from(instance), config);
}

}  // namespace crowdsense
