#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "crowdsense/coverage/objective.hpp"
#include "crowdsense/grid/types.hpp"

namespace crowdsense {

enum class Algorithm { RN, TVPG, TCPG, MSA, MSAGI, GraphDP };

inline constexpr std::array<Algorithm, 6> kAllAlgorithms = {Algorithm::RN,  Algorithm::TVPG,  Algorithm::TCPG,
                                                           Algorithm::MSA, Algorithm::MSAGI, Algorithm::GraphDP};

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::RN: return "RN";
    case Algorithm::TVPG: return "TVPG";
    case Algorithm::TCPG: return "TCPG";
    case Algorithm::MSA: return "MSA";
    case Algorithm::MSAGI: return "MSAGI";
    case Algorithm::GraphDP: return "GraphDP";
  }
  return "?";
}

inline Algorithm algorithm_from_string(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    std::string_view candidate = to_string(a);
    if (candidate.size() != name.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(candidate[i])) != std::tolower(static_cast<unsigned char>(name[i]))) {
        same = false;
        break;
      }
    }
    if (same) return a;
  }
  throw FormatError("unknown planner '" + std::string(name) + "'");
}

struct AnnealingConfig {
  int restarts = 5;
  int iters_per_restart = 500;
  double t0 = 1.0;
  double decay = 0.95;
  int batch = 50;  // proposals between temperature decays
};

struct GraphDpConfig {
  int replacement_rounds_max = 20;
};

struct PlannerConfig {
  Algorithm algorithm = Algorithm::GraphDP;
  std::uint64_t seed = 0;
  AnnealingConfig sa;
  GraphDpConfig graphdp;

  void validate() const {
    if (!(sa.decay > 0.0 && sa.decay < 1.0)) throw DomainError("sa.decay must lie in (0, 1)");
    if (sa.restarts < 1 || sa.iters_per_restart < 1 || sa.batch < 1 || graphdp.replacement_rounds_max < 1) {
      throw DomainError("planner counts must be >= 1");
    }
    if (!(sa.t0 > 0.0)) throw DomainError("sa.t0 must be positive");
  }
};

struct PlanResult {
  Algorithm algorithm = Algorithm::GraphDP;
  Solution solution;
  ObjectiveValue objective;
  double cost = 0.0;
  std::vector<std::string> planner_log;
};

}  // namespace crowdsense
