#pragma once

#include <cstdint>
#include <vector>

#include "edgesplit/qoe.hpp"
#include "edgesplit/scenario.hpp"

namespace edgesplit {

// User indices in processing order: ascending request slot, ties by id.
std::vector<int> request_order(const Scenario& scenario);

// Grants the first B_max users in request order; splits optimized for that
// grant count.
Decision baseline_all_offload_opt(const Scenario& scenario);
// Same grants, every granted user offloads the maximum N - N_min steps.
Decision baseline_all_offload_fixed(const Scenario& scenario);
// Everyone runs fully locally.
Decision baseline_all_local(const Scenario& scenario);

struct GaConfig {
  int population = 100;
  int iterations = 200;
  int tournament = 3;
  double crossover_mix = 0.5;    // per-gene probability of taking the second parent
  double mutation_rate = -1.0;   // per bit; negative means 1 / I
  int elitism = 2;
  std::uint64_t seed = 0;
};

void validate(const GaConfig& cfg);

struct GaResult {
  Decision decision;
  double best_fitness = 0.0;
  std::vector<double> best_per_generation;  // index 0 = initial population
};

GaResult run_ga(const Scenario& scenario, const GaConfig& cfg);
Decision solve_ga(const Scenario& scenario, const GaConfig& cfg);

struct BnbResult {
  Decision decision;          // grants with split N_min, denials with N
  double fixed_split_value = 0.0;  // optimum of the fixed-split quadratic form
  double objective = 0.0;          // the same decision scored by the objective
  long long nodes = 0;
};

// Exact maximizer of the fixed-split (N_min) quadratic form under the B_max cap.
BnbResult run_bnb(const Scenario& scenario);
Decision solve_bnb(const Scenario& scenario);

// Exhaustive maximizer of the fixed-split quadratic form; test oracle for BnB.
// Refuses more than 15 users.
std::vector<bool> exhaustive_fixed_split(const Scenario& scenario, double* best_value = nullptr);

// Exact optimum exploiting that users couple only through the grant count.
Decision solve_count_oracle(const Scenario& scenario);

constexpr int kExhaustiveMaxUsers = 15;
// Enumerates all grant patterns within B_max with optimal inner splits.
Decision solve_exhaustive(const Scenario& scenario);

}  // namespace edgesplit
