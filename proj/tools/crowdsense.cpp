// crowdsense: command-line front end for instance generation, planning,
// disturbance handling, refinement and experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "crowdsense/disturbances/io.hpp"
#include "crowdsense/gateway/agents.hpp"
#include "crowdsense/gateway/http.hpp"
#include "crowdsense/gateway/mock.hpp"
#include "crowdsense/harness/experiment.hpp"
#include "crowdsense/harness/ingest.hpp"
#include "crowdsense/planners/io.hpp"

using namespace crowdsense;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void emit_json(const json& doc, const std::string& out) {
  if (out.empty() || out == "-") std::cout << doc.dump(2) << "\n";
  else write_json_file(out, doc);
}

Instance load_instance(const std::string& path) {
  Instance inst = instance_from_json(read_json_file(path));
  inst.validate();
  return inst;
}

struct GatewayFlags {
  std::string endpoint;
  std::string model;
  std::string key_env;
  std::string mock_script;
  double temperature = 0.1;
  int max_retries = 2;

  void attach(CLI::App* app) {
    app->add_option("--endpoint", endpoint, "chat-completion URL for --policy llm");
    app->add_option("--model", model, "model name for --policy llm");
    app->add_option("--api-key-env", key_env, "environment variable holding the API key");
    app->add_option("--mock-script", mock_script, "JSON list of {match, reply} for --policy mock");
    app->add_option("--temperature", temperature, "sampling temperature")->check(CLI::NonNegativeNumber);
    app->add_option("--max-retries", max_retries, "parse/transport retries before falling back")
        ->check(CLI::NonNegativeNumber);
  }

  GatewayConfig config(GatewayConfig base = {}) const {
    if (!endpoint.empty()) base.endpoint = endpoint;
    if (!model.empty()) base.model = model;
    if (!key_env.empty()) base.api_key_env = key_env;
    base.temperature = temperature;
    base.max_retries = max_retries;
    return base;
  }
};

/// Client for --policy llm or mock; null for deterministic.
std::unique_ptr<ChatClient> make_client(const std::string& policy, const GatewayConfig& cfg,
                                        const std::string& mock_script) {
  if (policy == "deterministic") return nullptr;
  if (policy == "mock") {
    if (mock_script.empty()) throw DomainError("--policy mock needs --mock-script");
    return std::make_unique<MockChatClient>(mock_script_from_json(read_json_file(mock_script)));
  }
  if (policy == "llm") {
    if (cfg.api_key().empty()) {
      std::cerr << "warning: " << cfg.api_key_env << " is not set; requests go out unauthenticated\n";
    }
    return std::make_unique<HttpChatClient>(cfg);
  }
  throw DomainError("unknown policy '" + policy + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Participatory sensing planner with disturbance-aware refinement"};
  app.require_subcommand(1);

  // gen
  std::string dataset = "tdrive", scale = "Small", out;
  std::uint64_t seed = 0;
  double alpha = 0.5;
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  gen->add_option("--dataset", dataset, "tdrive or grab");
  gen->add_option("--scale", scale, "Small, Medium or Large");
  gen->add_option("--seed", seed);
  gen->add_option("--alpha", alpha, "objective weight")->check(CLI::Range(0.0, 1.0));
  gen->add_option("-o,--out", out, "output file (default stdout)");

  // ingest
  std::string csv, schema = "tdrive", start, bbox_text;
  double ingest_budget = -1.0;
  auto* ingest = app.add_subcommand("ingest", "build an instance from a GPS trajectory CSV");
  ingest->add_option("--csv", csv)->required();
  ingest->add_option("--schema", schema, "tdrive (id,datetime,lon,lat) or grab (Grab-Posisi columns)");
  ingest->add_option("--scale", scale);
  ingest->add_option("--bbox", bbox_text, "lon_min,lon_max,lat_min,lat_max")->required();
  ingest->add_option("--start", start, "window start, YYYY-MM-DD HH:MM:SS (UTC) or epoch seconds")->required();
  ingest->add_option("--budget", ingest_budget, "override the scale budget");
  ingest->add_option("-o,--out", out);

  // plan
  std::string instance_path, planner = "GraphDP";
  auto* plan_cmd = app.add_subcommand("plan", "compute a baseline schedule");
  plan_cmd->add_option("--instance", instance_path)->required();
  plan_cmd->add_option("--planner", planner, "RN, TVPG, TCPG, MSA, MSAGI or GraphDP");
  plan_cmd->add_option("--seed", seed);
  plan_cmd->add_option("-o,--out", out);

  // disturb
  std::string baseline_path, dtype, text;
  auto* disturb = app.add_subcommand("disturb", "create a disturbance instruction");
  disturb->add_option("--instance", instance_path)->required();
  disturb->add_option("--baseline", baseline_path, "baseline plan (anchors synthetic disturbances)");
  disturb->add_option("--type", dtype, "synthesise one of the disturbance types");
  disturb->add_option("--text", text, "parse a natural-language instruction instead");
  disturb->add_option("--seed", seed);
  disturb->add_option("-o,--out", out);

  // refine
  std::string disturbance_path, policy = "deterministic", out_dir;
  int max_iter = 10;
  GatewayFlags gw;
  auto* refine = app.add_subcommand("refine", "refine a baseline under a disturbance");
  refine->add_option("--instance", instance_path)->required();
  refine->add_option("--baseline", baseline_path)->required();
  refine->add_option("--disturbance", disturbance_path)->required();
  refine->add_option("--policy", policy, "deterministic, llm or mock")
      ->check(CLI::IsMember({"deterministic", "llm", "mock"}));
  refine->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
  refine->add_option("--out-dir", out_dir, "write trace.jsonl, summary.json and heatmaps here");
  gw.attach(refine);

  // experiment
  std::string config_path;
  int threads = -1;
  auto* experiment = app.add_subcommand("experiment", "run a suite of seeded trials");
  experiment->add_option("--config", config_path, "suite file (key = value lines)")->required();
  experiment->add_option("--out-dir", out_dir, "override output_dir");
  experiment->add_option("--threads", threads, "override threads");

  // report
  std::string metrics_path, format = "md";
  auto* report = app.add_subcommand("report", "render a metrics table");
  report->add_option("--metrics", metrics_path, "metrics.json from an experiment")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"md", "csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ScaleConfig sc = scale_config(dataset_from_string(dataset), scale_name_from_string(scale));
      emit_json(to_json(generate_instance(sc, seed, alpha)), out);
    } else if (*ingest) {
      const Dataset schema_ds = dataset_from_string(schema);
      std::ifstream in(csv);
      if (!in) throw FormatError("cannot open " + csv);
      const TrajectoryBatch batch = read_trajectories(in, schema_ds);
      const auto parts = detail::list_value(bbox_text);
      if (parts.size() != 4) throw FormatError("--bbox needs four comma-separated numbers");
      IngestOptions opt;
      opt.bbox = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3])};
      if (auto ts = parse_datetime(start)) opt.window_start = *ts;
      else opt.window_start = std::stoll(start);
      opt.budget = ingest_budget;
      const IngestResult r =
          ingest_trajectories(batch.records, scale_config(schema_ds, scale_name_from_string(scale)), opt);
      std::cerr << fmt::format("{} rows, {} skipped; {} entities, {} workers emitted\n", batch.rows, batch.skipped,
                               r.entities, r.instance.workers.size());
      for (const std::string& e : batch.errors) std::cerr << "  skipped " << e << "\n";
      emit_json(to_json(r.instance), out);
    } else if (*plan_cmd) {
      PlannerConfig pc;
      pc.algorithm = algorithm_from_string(planner);
      pc.seed = seed;
      const PlanResult r = plan(load_instance(instance_path), pc);
      std::cerr << fmt::format("{}: {} workers, cost {:g}, J {:.6f}\n", to_string(r.algorithm), r.solution.size(),
                               r.cost, r.objective.objective);
      emit_json(to_json(r), out);
    } else if (*disturb) {
      const Instance inst = load_instance(instance_path);
      DisturbanceInstruction d;
      if (!text.empty()) {
        d = parse_disturbance(text, inst.grid, inst.workers);
      } else {
        if (dtype.empty() || baseline_path.empty()) throw DomainError("give --text, or --type with --baseline");
        const PlanResult base = plan_result_from_json(read_json_file(baseline_path), inst);
        d = make_disturbance(disturbance_type_from_string(dtype), inst, base.solution, seed);
      }
      std::cerr << d.description << "\n";
      emit_json(to_json(d), out);
    } else if (*refine) {
      const Instance inst = load_instance(instance_path);
      const PlanResult base = plan_result_from_json(read_json_file(baseline_path), inst);
      const DisturbanceInstruction d = instruction_from_json(read_json_file(disturbance_path), inst.grid);
      const GatewayConfig cfg = gw.config();
      auto client = make_client(policy, cfg, gw.mock_script);
      std::unique_ptr<LlmPolicySet> llm;
      Policies policies = deterministic_policies();
      if (client) {
        llm = std::make_unique<LlmPolicySet>(*client, cfg);
        policies = llm->policies();
      }
      RefinementOptions opt;
      opt.max_iterations = max_iter;
      const RefinementTrace trace = run_refinement(inst, base, d, policies, opt);
      for (const IterationRecord& r : trace.iterations) {
        std::cerr << fmt::format("iter {}: feasible {} success {} J {:.6f} cost {:g}{}\n{}\n", r.iter, r.feasible,
                                 r.success, r.metrics.objective_value, r.metrics.cost,
                                 r.tags.empty() ? "" : " [" + fmt::format("{}", fmt::join(r.tags, ", ")) + "]",
                                 r.explanation);
      }
      std::cerr << fmt::format("success {} after {} iterations; J {:.6f} -> {:.6f}\n", trace.success,
                               trace.iterations_used, trace.baseline_metrics.objective_value,
                               trace.final_metrics.objective_value);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir + "/trace.jsonl", trace_jsonl(trace));
        write_json_file(out_dir + "/summary.json", trace_summary(trace));
        for (const IterationRecord& r : trace.iterations) {
          write_heatmaps(std::filesystem::path(out_dir) / "heatmaps", fmt::format("iter_{:02d}", r.iter), r.heatmaps);
        }
      } else {
        std::cout << trace_summary(trace).dump(2) << "\n";
      }
    } else if (*experiment) {
      SuiteConfig suite = parse_suite(read_text(config_path));
      if (!out_dir.empty()) suite.output_dir = out_dir;
      if (threads >= 0) suite.threads = threads;
      std::unique_ptr<ChatClient> client = make_client(suite.policy, suite.gateway, suite.mock_script);
      PolicyFactory factory;
      std::vector<std::unique_ptr<LlmPolicySet>> sets;
      std::mutex sets_mutex;
      if (client) {
        factory = [&] {
          std::lock_guard lock(sets_mutex);
          sets.push_back(std::make_unique<LlmPolicySet>(*client, suite.gateway));
          return sets.back()->policies();
        };
      }
      const auto t0 = std::chrono::steady_clock::now();
      const ExperimentResult r = run_experiment(suite, factory);
      std::cout << render_report(r.table);
      std::cerr << fmt::format("{} cells in {:.1f}s; outputs in {}\n", r.cells.size(),
                               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                               suite.output_dir);
    } else if (*report) {
      const MetricsTable t = metrics_table_from_json(read_json_file(metrics_path));
      if (format == "csv") std::cout << to_csv(t);
      else if (format == "json") std::cout << to_json(t).dump(2) << "\n";
      else std::cout << render_report(t);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
