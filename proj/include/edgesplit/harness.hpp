#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgesplit/baselines.hpp"
#include "edgesplit/dqn.hpp"
#include "edgesplit/qoe.hpp"
#include "edgesplit/scenario.hpp"

namespace edgesplit {

enum class SolverKind { kDqn, kOracle, kExhaustive, kGa, kBnb, kB1, kB2, kB3 };

std::string to_string(SolverKind kind);
SolverKind parse_solver(const std::string& text);

// `policy` is required for kDqn; `seed` feeds the GA.
Decision run_solver(SolverKind kind, const Scenario& scenario, const TrainedPolicy* policy,
                    std::uint64_t seed);

// Decision file: per-user grant/split, latency breakdown and PAI term plus the
// aggregate objective.
nlohmann::json decision_report(const Scenario& scenario, const Decision& decision,
                               const std::string& solver);
Decision decision_from_report(const nlohmann::json& j);

enum class SweepAxis { kUserCount, kGpus };
std::string to_string(SweepAxis axis);
SweepAxis parse_axis(const std::string& text);

struct ExperimentConfig {
  SweepAxis axis = SweepAxis::kUserCount;
  std::vector<int> values;
  int cases = 100;
  std::vector<SolverKind> solvers;
  std::optional<std::filesystem::path> policy;
  GeneratorConfig generator = default_generator_config();
  EdgeConfig edge = default_edge_config();
  PaiParams pai;
  std::filesystem::path output_dir;
  std::uint64_t master_seed = 0;
  bool record_timing = false;
  int jobs = 1;
};

ExperimentConfig default_user_sweep();
ExperimentConfig default_gpu_sweep();

void validate(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

// The same case index reuses the same seed at every axis value, so axis
// points compare identical user populations.
std::uint64_t case_seed(std::uint64_t master_seed, int case_index);
Scenario sweep_scenario(const ExperimentConfig& cfg, int axis_value, int case_index);

struct ReportRow {
  std::string solver;
  int axis_value = 0;
  int case_index = 0;
  std::uint64_t case_seed = 0;
  double objective = 0.0;
  double mean_pai_term = 0.0;
  double mean_e2e_latency = 0.0;
  double decision_time = 0.0;  // seconds; 0 unless timing is recorded
  int grant_count = 0;
};

std::vector<ReportRow> run_sweep(const ExperimentConfig& cfg, const TrainedPolicy* policy);

struct SummaryRow {
  std::string solver;
  int axis_value = 0;
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double ci95 = 0.0;  // half-width, normal approximation
};

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows);

extern const char* const kReportHeader;
extern const char* const kSummaryHeader;
std::string format_report_csv(const std::vector<ReportRow>& rows, const std::string& axis);
std::string format_summary_csv(const std::vector<SummaryRow>& rows, const std::string& axis);
std::vector<ReportRow> parse_report_csv(const std::string& text, std::string* axis = nullptr);

// Mean objective against the axis, one polyline per solver.
std::string render_svg(const std::vector<SummaryRow>& rows, const std::string& axis_label);

// Spearman rank correlation with average ranks for ties; 0 when either series
// is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Default output directory: $EDGESPLIT_OUT_DIR if set, else "out".
std::filesystem::path default_output_dir();

void write_text_file(const std::string& text, const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
std::string format_double(double v);

}  // namespace edgesplit
