#include "edgesplit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "edgesplit/errors.hpp"
#include "edgesplit/split_solver.hpp"

namespace edgesplit {

using nlohmann::json;

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kDqn: return "dqn";
    case SolverKind::kOracle: return "oracle";
    case SolverKind::kExhaustive: return "exhaustive";
    case SolverKind::kGa: return "ga";
    case SolverKind::kBnb: return "bnb";
    case SolverKind::kB1: return "b1";
    case SolverKind::kB2: return "b2";
    case SolverKind::kB3: return "b3";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& text) {
  static const std::map<std::string, SolverKind> names = {
      {"dqn", SolverKind::kDqn}, {"oracle", SolverKind::kOracle},
      {"exhaustive", SolverKind::kExhaustive}, {"ga", SolverKind::kGa},
      {"bnb", SolverKind::kBnb}, {"b1", SolverKind::kB1},
      {"b2", SolverKind::kB2}, {"b3", SolverKind::kB3}};
  auto it = names.find(text);
  if (it == names.end()) {
    throw ValidationError("unknown solver '" + text +
                          "' (expected dqn, oracle, exhaustive, ga, bnb, b1, b2, b3)");
  }
  return it->second;
}

Decision run_solver(SolverKind kind, const Scenario& scenario, const TrainedPolicy* policy,
                    std::uint64_t seed) {
  switch (kind) {
    case SolverKind::kDqn:
      if (!policy) throw ValidationError("solver dqn requires a policy");
      return greedy_solve(*policy, scenario);
    case SolverKind::kOracle: return solve_count_oracle(scenario);
    case SolverKind::kExhaustive: return solve_exhaustive(scenario);
    case SolverKind::kGa: {
      GaConfig cfg;
      cfg.seed = seed;
      return solve_ga(scenario, cfg);
    }
    case SolverKind::kBnb: return solve_bnb(scenario);
    case SolverKind::kB1: return baseline_all_offload_opt(scenario);
    case SolverKind::kB2: return baseline_all_offload_fixed(scenario);
    case SolverKind::kB3: return baseline_all_local(scenario);
  }
  throw ContractError("run_solver: unhandled solver");
}

json decision_report(const Scenario& scenario, const Decision& decision, const std::string& solver) {
  const Evaluation ev = evaluate(scenario, decision);
  json users = json::array();
  for (std::size_t i = 0; i < scenario.users.size(); ++i) {
    users.push_back({{"id", scenario.users[i].id},
                     {"granted", decision.entries[i].granted},
                     {"split", decision.entries[i].split},
                     {"pai_term", ev.users[i].pai_term},
                     {"latency", to_json(ev.users[i].latency)}});
  }
  return {{"solver", solver},
          {"scenario_seed", scenario.seed},
          {"objective", ev.objective},
          {"pai_sum", ev.pai_sum},
          {"latency_sum", ev.latency_sum},
          {"granted_count", ev.granted_count},
          {"units", {{"latency", "seconds"}, {"objective", "alpha-weighted PAI minus seconds"}}},
          {"users", users}};
}

Decision decision_from_report(const json& j) {
  Decision d;
  for (const auto& u : j.at("users")) {
    d.entries.push_back({u.at("granted").get<bool>(), u.at("split").get<int>()});
  }
  return d;
}

std::string to_string(SweepAxis axis) {
  return axis == SweepAxis::kUserCount ? "user_count" : "gpus";
}

SweepAxis parse_axis(const std::string& text) {
  if (text == "user_count" || text == "users") return SweepAxis::kUserCount;
  if (text == "gpus") return SweepAxis::kGpus;
  throw ValidationError("sweep axis must be user_count or gpus (got '" + text + "')");
}

ExperimentConfig default_user_sweep() {
  ExperimentConfig cfg;
  cfg.axis = SweepAxis::kUserCount;
  cfg.values = {10, 20, 30, 40, 50, 60};
  cfg.solvers = {SolverKind::kB1, SolverKind::kB2, SolverKind::kB3, SolverKind::kOracle};
  cfg.edge.gpus = 8;
  cfg.output_dir = default_output_dir();
  return cfg;
}

ExperimentConfig default_gpu_sweep() {
  ExperimentConfig cfg = default_user_sweep();
  cfg.axis = SweepAxis::kGpus;
  cfg.values = {2, 4, 8, 16};
  cfg.generator.user_count = 20;
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.values.empty()) throw ValidationError("sweep.values must be non-empty");
  for (int v : cfg.values) {
    if (v < 1) throw ValidationError("sweep.values must be >= 1");
  }
  if (cfg.cases < 1) throw ValidationError("sweep.cases must be >= 1");
  if (cfg.solvers.empty()) throw ValidationError("sweep.solvers must be non-empty");
  if (cfg.jobs < 1) throw ValidationError("sweep.jobs must be >= 1");
  const bool needs_policy =
      std::find(cfg.solvers.begin(), cfg.solvers.end(), SolverKind::kDqn) != cfg.solvers.end();
  if (needs_policy && !cfg.policy) throw ValidationError("sweep.policy is required for solver dqn");
  validate(cfg.generator);
  validate(cfg.edge);
  validate(cfg.pai);
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("sweep config must be an object");
  ExperimentConfig cfg = default_user_sweep();
  try {
    if (j.contains("axis")) {
      cfg.axis = parse_axis(j.at("axis").get<std::string>());
      if (cfg.axis == SweepAxis::kGpus) cfg = default_gpu_sweep();
    }
    if (j.contains("values")) cfg.values = j.at("values").get<std::vector<int>>();
    if (j.contains("cases")) cfg.cases = j.at("cases").get<int>();
    if (j.contains("solvers")) {
      cfg.solvers.clear();
      for (const auto& s : j.at("solvers")) cfg.solvers.push_back(parse_solver(s.get<std::string>()));
    }
    if (j.contains("policy")) cfg.policy = j.at("policy").get<std::string>();
    if (j.contains("generator")) cfg.generator = generator_config_from_json(j.at("generator"));
    if (j.contains("edge")) cfg.edge = edge_config_from_json(j.at("edge"));
    if (j.contains("pai")) cfg.pai = pai_params_from_json(j.at("pai"));
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("record_timing")) cfg.record_timing = j.at("record_timing").get<bool>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sweep config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json solvers = json::array();
  for (auto s : cfg.solvers) solvers.push_back(to_string(s));
  json j = {{"axis", to_string(cfg.axis)},
            {"values", cfg.values},
            {"cases", cfg.cases},
            {"solvers", solvers},
            {"generator", to_json(cfg.generator)},
            {"edge", to_json(cfg.edge)},
            {"pai", to_json(cfg.pai)},
            {"output_dir", cfg.output_dir.string()},
            {"master_seed", cfg.master_seed},
            {"record_timing", cfg.record_timing},
            {"jobs", cfg.jobs}};
  if (cfg.policy) j["policy"] = cfg.policy->string();
  return j;
}

std::uint64_t case_seed(std::uint64_t master_seed, int case_index) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(case_index));
}

Scenario sweep_scenario(const ExperimentConfig& cfg, int axis_value, int case_index) {
  GeneratorConfig gen = cfg.generator;
  EdgeConfig edge = cfg.edge;
  if (cfg.axis == SweepAxis::kUserCount) {
    gen.user_count = axis_value;
  } else {
    // Alpha bands stay tied to the base configuration, not the swept GPU count.
    if (!gen.alpha_reference_gpus) gen.alpha_reference_gpus = cfg.edge.gpus;
    edge.gpus = axis_value;
  }
  return generate_scenario(case_seed(cfg.master_seed, case_index), gen, edge, cfg.pai);
}

std::vector<ReportRow> run_sweep(const ExperimentConfig& cfg, const TrainedPolicy* policy) {
  validate(cfg);
  struct Job {
    int axis_value;
    int case_index;
  };
  std::vector<Job> jobs;
  for (int v : cfg.values) {
    for (int c = 0; c < cfg.cases; ++c) jobs.push_back({v, c});
  }
  const std::size_t per_job = cfg.solvers.size();
  std::vector<ReportRow> rows(jobs.size() * per_job);
  std::vector<std::string> errors(jobs.size());

  auto run_job = [&](std::size_t k) {
    const Job& job = jobs[k];
    const Scenario scenario = sweep_scenario(cfg, job.axis_value, job.case_index);
    for (std::size_t s = 0; s < per_job; ++s) {
      const auto start = std::chrono::steady_clock::now();
      const Decision d = run_solver(cfg.solvers[s], scenario, policy, scenario.seed);
      const auto stop = std::chrono::steady_clock::now();
      const Evaluation ev = evaluate(scenario, d);
      ReportRow& row = rows[k * per_job + s];
      row.solver = to_string(cfg.solvers[s]);
      row.axis_value = job.axis_value;
      row.case_index = job.case_index;
      row.case_seed = scenario.seed;
      row.objective = ev.objective;
      row.mean_pai_term = ev.pai_sum / scenario.user_count();
      row.mean_e2e_latency = ev.latency_sum / scenario.user_count();
      row.grant_count = ev.granted_count;
      row.decision_time =
          cfg.record_timing ? std::chrono::duration<double>(stop - start).count() : 0.0;
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        run_job(k);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!errors[k].empty()) {
      throw std::runtime_error("sweep case failed (axis value " +
                               std::to_string(jobs[k].axis_value) + ", case seed " +
                               std::to_string(case_seed(cfg.master_seed, jobs[k].case_index)) +
                               "): " + errors[k]);
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows) {
  // Keep first-seen solver order and ascending axis values.
  std::vector<std::string> solvers;
  std::map<std::pair<std::string, int>, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) {
      solvers.push_back(r.solver);
    }
    groups[{r.solver, r.axis_value}].push_back(r.objective);
  }
  std::vector<SummaryRow> out;
  for (const auto& solver : solvers) {
    for (const auto& [key, values] : groups) {
      if (key.first != solver) continue;
      SummaryRow s;
      s.solver = solver;
      s.axis_value = key.second;
      s.n = static_cast<int>(values.size());
      for (double v : values) s.mean += v;
      s.mean /= s.n;
      double ss = 0.0;
      for (double v : values) ss += (v - s.mean) * (v - s.mean);
      s.stddev = s.n > 1 ? std::sqrt(ss / (s.n - 1)) : 0.0;
      s.ci95 = s.n > 1 ? 1.96 * s.stddev / std::sqrt(static_cast<double>(s.n)) : 0.0;
      out.push_back(s);
    }
  }
  return out;
}

const char* const kReportHeader =
    "solver,axis,axis_value,case,case_seed,objective,mean_pai_term,mean_e2e_latency,"
    "decision_time_s,grant_count";
const char* const kSummaryHeader = "solver,axis,axis_value,n,mean_objective,std,ci95_halfwidth";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_report_csv(const std::vector<ReportRow>& rows, const std::string& axis) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << r.solver << ',' << axis << ',' << r.axis_value << ',' << r.case_index << ','
        << r.case_seed << ',' << format_double(r.objective) << ','
        << format_double(r.mean_pai_term) << ',' << format_double(r.mean_e2e_latency) << ','
        << format_double(r.decision_time) << ',' << r.grant_count << '\n';
  }
  return out.str();
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows, const std::string& axis) {
  std::ostringstream out;
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    out << s.solver << ',' << axis << ',' << s.axis_value << ',' << s.n << ','
        << format_double(s.mean) << ',' << format_double(s.stddev) << ','
        << format_double(s.ci95) << '\n';
  }
  return out.str();
}

std::vector<ReportRow> parse_report_csv(const std::string& text, std::string* axis) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw ValidationError("report CSV: unexpected header");
  }
  std::vector<ReportRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) {
      throw ValidationError("report CSV line " + std::to_string(line_no) + ": expected 10 fields");
    }
    try {
      ReportRow r;
      r.solver = cells[0];
      if (axis) *axis = cells[1];
      r.axis_value = std::stoi(cells[2]);
      r.case_index = std::stoi(cells[3]);
      r.case_seed = std::stoull(cells[4]);
      r.objective = std::stod(cells[5]);
      r.mean_pai_term = std::stod(cells[6]);
      r.mean_e2e_latency = std::stod(cells[7]);
      r.decision_time = std::stod(cells[8]);
      r.grant_count = std::stoi(cells[9]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ValidationError("report CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

std::string render_svg(const std::vector<SummaryRow>& rows, const std::string& axis_label) {
  const double width = 640, height = 420, left = 80, right = 140, top = 30, bottom = 50;
  std::vector<std::string> solvers;
  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& r : rows) {
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) {
      solvers.push_back(r.solver);
    }
    x_lo = std::min(x_lo, double(r.axis_value));
    x_hi = std::max(x_hi, double(r.axis_value));
    y_lo = std::min(y_lo, r.mean);
    y_hi = std::max(y_hi, r.mean);
  }
  if (rows.empty()) x_lo = y_lo = 0, x_hi = y_hi = 1;
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right); };
  auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * (height - top - bottom); };
  static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                  "#66a61e", "#e6ab02", "#a6761d", "#666666"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    const double y = y_lo + (y_hi - y_lo) * k / 4.0;
    std::snprintf(buf, sizeof(buf), "%.4g", y);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << buf
        << "</text>\n";
  }
  std::vector<int> xs;
  for (const auto& r : rows) {
    if (std::find(xs.begin(), xs.end(), r.axis_value) == xs.end()) xs.push_back(r.axis_value);
  }
  for (int x : xs) {
    svg << "<text x=\"" << px(x) << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">" << axis_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (top + height - bottom) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (top + height - bottom) / 2
      << ")\">mean objective</text>\n";
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    const char* color = palette[s % 8];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) {
      if (r.solver == solvers[s]) svg << px(r.axis_value) << ',' << py(r.mean) << ' ';
    }
    svg << "\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << width - right + 10 << "\" y1=\"" << ly << "\" x2=\""
        << width - right + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << width - right + 36 << "\" y=\"" << ly + 4 << "\">" << solvers[s]
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("spearman: need paired series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) mx += rx[i], my += ry[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("EDGESPLIT_OUT_DIR"); env && *env) return env;
  return "out";
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace edgesplit
