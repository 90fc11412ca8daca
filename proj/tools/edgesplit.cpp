// edgesplit command line: generate, train, solve, sweep, plot.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "edgesplit/errors.hpp"
#include "edgesplit/harness.hpp"

namespace fs = std::filesystem;
using namespace edgesplit;
using nlohmann::json;

namespace {

// Exit codes: 0 ok, 1 runtime/validation failure, 2 usage, 3 internal bug trap.
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve_out(const std::string& given, const std::string& fallback) {
  if (!given.empty()) return given;
  return default_output_dir() / fallback;
}

struct ScenarioInputs {
  GeneratorConfig generator = default_generator_config();
  EdgeConfig edge = default_edge_config();
  PaiParams pai;
  json extra = json::object();
};

ScenarioInputs read_inputs(const std::string& config) {
  ScenarioInputs in;
  if (config.empty()) return in;
  in.extra = read_json_file(config);
  if (!in.extra.is_object()) throw ValidationError(config + ": top level must be an object");
  if (in.extra.contains("generator")) in.generator = generator_config_from_json(in.extra["generator"]);
  if (in.extra.contains("edge")) in.edge = edge_config_from_json(in.extra["edge"]);
  if (in.extra.contains("pai")) in.pai = pai_params_from_json(in.extra["pai"]);
  return in;
}

int cmd_generate(std::uint64_t seed, int users, std::optional<int> gpus, std::optional<int> b_max,
                 const std::string& config, const std::string& out) {
  ScenarioInputs in = read_inputs(config);
  in.generator.user_count = users;
  if (gpus) in.edge.gpus = *gpus;
  if (b_max) in.edge.b_max = *b_max;
  const Scenario s = generate_scenario(seed, in.generator, in.edge, in.pai);
  const fs::path path = resolve_out(out, "scenario.json");
  save_scenario(s, path);
  std::cout << "wrote " << path.string() << " (" << s.user_count() << " users, G=" << s.edge.gpus
            << ")\n";
  return 0;
}

struct TrainArgs {
  std::string scope;
  int episodes = -1;
  std::uint64_t seed = 0;
  std::string scenario;
  std::optional<int> gpus;
  std::string config;
  std::string out;
  std::string curve;
};

int cmd_train(const TrainArgs& a) {
  const TrainScope scope = parse_scope(a.scope);
  ScenarioInputs in = read_inputs(a.config);
  TrainHyper hyper;
  if (in.extra.contains("hyper")) hyper = train_hyper_from_json(in.extra["hyper"]);
  if (a.episodes >= 0) hyper.episodes = a.episodes;
  validate(hyper);

  const int users_min = in.extra.value("users_min", 10);
  const int users_max = in.extra.value("users_max", 60);
  std::optional<ScenarioSampler> sampler;
  switch (scope) {
    case TrainScope::kSpecific: {
      if (a.scenario.empty()) throw UsageError("train --scope specific requires --scenario");
      Scenario s = load_scenario(a.scenario);
      if (a.gpus) s.edge.gpus = *a.gpus;
      sampler = ScenarioSampler::specific(std::move(s), in.generator);
      break;
    }
    case TrainScope::kGpuConstrained: {
      const int g = a.gpus.value_or(in.edge.gpus);
      sampler = ScenarioSampler::pooled(scope, a.seed, in.extra.value("pool_size", 1000), users_min,
                                        users_max, {g}, in.generator, in.edge, in.pai);
      break;
    }
    case TrainScope::kGeneral: {
      std::vector<int> choices = in.extra.value("gpu_choices", std::vector<int>{2, 4, 8, 16});
      sampler = ScenarioSampler::pooled(scope, a.seed, in.extra.value("pool_size", 2000), users_min,
                                        users_max, choices, in.generator, in.edge, in.pai);
      break;
    }
  }

  const int report_every = std::max(1, hyper.episodes / 20);
  TrainResult result = train(*sampler, hyper, a.seed, [&](int ep, double ret) {
    if ((ep + 1) % report_every == 0) {
      std::cerr << "episode " << ep + 1 << "/" << hyper.episodes << " return " << ret << "\n";
    }
  });

  const fs::path policy_path = resolve_out(a.out, "policy.json");
  save_policy(result.policy, policy_path);
  fs::path curve_path = a.curve;
  if (curve_path.empty()) {
    curve_path = policy_path;
    curve_path.replace_extension(".curve.csv");
  }
  const std::size_t window = scope == TrainScope::kSpecific ? 100 : 1000;
  const auto smooth = moving_average(result.returns, window);
  std::string csv = "episode,return,smoothed_return\n";
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    csv += std::to_string(i) + "," + format_double(result.returns[i]) + "," +
           format_double(smooth[i]) + "\n";
  }
  write_text_file(csv, curve_path);
  std::cout << "wrote " << policy_path.string() << " and " << curve_path.string() << " ("
            << result.env_steps << " env steps, " << result.train_steps << " train steps)\n";
  return 0;
}

int cmd_solve(const std::string& scenario_path, const std::string& solver_name,
              const std::string& policy_path, const std::string& out, std::uint64_t seed) {
  const SolverKind kind = parse_solver(solver_name);
  if (kind == SolverKind::kDqn && policy_path.empty()) {
    throw UsageError("solve --solver dqn requires --policy");
  }
  const Scenario s = load_scenario(scenario_path);
  std::optional<TrainedPolicy> policy;
  if (!policy_path.empty()) policy = load_policy(policy_path);
  const Decision d = run_solver(kind, s, policy ? &*policy : nullptr, seed);
  try {
    check_feasible(s, d);
  } catch (const ConstraintError& e) {
    std::cerr << "internal error: solver " << solver_name << " produced an infeasible decision ("
              << e.constraint() << "): " << e.what() << "\n";
    return kExitInternal;
  }
  const json report = decision_report(s, d, solver_name);
  const fs::path path = resolve_out(out, "decision.json");
  write_json_file(report, path);
  std::cout << "solver=" << solver_name << " objective=" << format_double(report["objective"].get<double>())
            << " granted=" << d.granted_count() << "/" << s.user_count() << " -> " << path.string()
            << "\n";
  return 0;
}

int cmd_sweep(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
              std::optional<int> jobs) {
  ExperimentConfig cfg = config.empty() ? default_user_sweep()
                                        : experiment_config_from_json(read_json_file(config));
  if (seed) cfg.master_seed = *seed;
  if (jobs) cfg.jobs = *jobs;
  if (!out.empty()) cfg.output_dir = out;
  if (cfg.output_dir.empty()) cfg.output_dir = default_output_dir();
  validate(cfg);
  std::optional<TrainedPolicy> policy;
  if (cfg.policy) policy = load_policy(*cfg.policy);

  const auto rows = run_sweep(cfg, policy ? &*policy : nullptr);
  const auto summary = summarize(rows);
  const std::string axis = to_string(cfg.axis);
  write_text_file(format_report_csv(rows, axis), cfg.output_dir / "report.csv");
  write_text_file(format_summary_csv(summary, axis), cfg.output_dir / "summary.csv");
  write_text_file(render_svg(summary, axis), cfg.output_dir / "objective.svg");
  std::cout << "wrote " << rows.size() << " rows to " << (cfg.output_dir / "report.csv").string()
            << "\n";
  for (const auto& r : summary) {
    std::printf("%-10s %s=%-4d mean=%.6f ci95=%.6f\n", r.solver.c_str(), axis.c_str(),
                r.axis_value, r.mean, r.ci95);
  }
  return 0;
}

int cmd_plot(const std::string& report, const std::string& out) {
  std::string axis;
  const auto rows = parse_report_csv(read_text_file(report), &axis);
  const fs::path path = resolve_out(out, "objective.svg");
  write_text_file(render_svg(summarize(rows), axis), path);
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge offloading of personalized diffusion inference"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int users = 0;
  std::optional<int> gpus;
  std::optional<int> b_max;
  std::string config, out;

  auto* gen = app.add_subcommand("generate", "Generate a random scenario");
  gen->add_option("--seed", seed, "Scenario seed")->required();
  gen->add_option("--users", users, "Number of users")->required()->check(CLI::PositiveNumber);
  gen->add_option("--gpus", gpus, "Edge GPU count");
  gen->add_option("--b-max", b_max, "Maximum concurrent grants");
  gen->add_option("--config", config, "JSON with generator/edge/pai overrides");
  gen->add_option("-o,--out", out, "Scenario file");

  TrainArgs targs;
  auto* tr = app.add_subcommand("train", "Train a DQN policy");
  tr->add_option("--scope", targs.scope, "general | gpu | specific")->required();
  tr->add_option("--episodes", targs.episodes, "Episode budget");
  tr->add_option("--seed", targs.seed, "Training seed");
  tr->add_option("--scenario", targs.scenario, "Scenario file (specific scope)");
  tr->add_option("--gpus", targs.gpus, "GPU count (gpu scope)");
  tr->add_option("--config", targs.config, "JSON with hyper/generator/edge/pai overrides");
  tr->add_option("-o,--out", targs.out, "Policy file");
  tr->add_option("--curve", targs.curve, "Learning-curve CSV");

  std::string scenario_path, solver = "oracle", policy_path;
  auto* so = app.add_subcommand("solve", "Solve one scenario");
  so->add_option("scenario", scenario_path, "Scenario file")->required();
  so->add_option("--solver", solver, "dqn | oracle | exhaustive | ga | bnb | b1 | b2 | b3");
  so->add_option("--policy", policy_path, "Policy file (dqn)");
  so->add_option("-o,--out", out, "Decision file");
  so->add_option("--seed", seed, "Solver seed (ga)");

  std::optional<std::uint64_t> sweep_seed;
  std::optional<int> jobs;
  auto* sw = app.add_subcommand("sweep", "Run an experiment sweep");
  sw->add_option("--config", config, "Experiment config JSON");
  sw->add_option("-o,--out", out, "Output directory");
  sw->add_option("--seed", sweep_seed, "Master seed");
  sw->add_option("--jobs", jobs, "Worker threads");

  std::string report;
  auto* pl = app.add_subcommand("plot", "Render an SVG from a report CSV");
  pl->add_option("report", report, "Report CSV")->required();
  pl->add_option("-o,--out", out, "SVG file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(seed, users, gpus, b_max, config, out);
    if (*tr) return cmd_train(targs);
    if (*so) return cmd_solve(scenario_path, solver, policy_path, out, seed);
    if (*sw) return cmd_sweep(config, out, sweep_seed, jobs);
    if (*pl) return cmd_plot(report, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConstraintError& e) {
    std::cerr << "internal error (" << e.constraint() << "): " << e.what() << "\n";
    return kExitInternal;
  } catch (const ContractError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
