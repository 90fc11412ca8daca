#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "edgesplit/qoe.hpp"
#include "edgesplit/scenario.hpp"

namespace edgesplit {

enum class SplitCase {
  kLocalDominates,     // edge step no faster than local: stay fully local
  kPaiSaturated,       // marginal PAI beats the latency gap everywhere: n = N
  kLatencySaturated,   // latency gap beats marginal PAI everywhere: n = N_min
  kInteriorRoot,
};

std::string_view to_string(SplitCase c);

struct SplitResult {
  int split = 0;
  std::optional<double> continuous_root;
  SplitCase split_case = SplitCase::kLocalDominates;
  // alpha * F(split) - L_i for the granted user, i.e. the user's own term in
  // the objective given the grant count.
  double inner_value = 0.0;
};

// alpha * a_f * F(n) * (1 - F(n)): derivative of the PAI term.
double marginal_pai_rate(double n, double alpha, const PaiParams& pai);

// Per-step latency gap local minus edge at grant count m.
double step_gap(const UserRequest& user, int granted_count, const EdgeConfig& edge);

// Inner objective of a granted user at an integer split, as a function of m.
double granted_value(const UserRequest& user, int split, int granted_count,
                     const EdgeConfig& edge, const PaiParams& pai);

SplitResult optimal_split(const UserRequest& user, int granted_count, const EdgeConfig& edge,
                          const PaiParams& pai);

// Fills optimal splits for granted users (m = number of grants) and N for the
// rest. Does not check the B_max cap.
Decision resolve_splits(const Scenario& scenario, const std::vector<bool>& grants);

// Memoizes optimal_split per (user, grant count) for one scenario.
class SplitTable {
 public:
  explicit SplitTable(const Scenario& scenario);

  const SplitResult& get(int user, int granted_count);
  // Value of the user when denied (split N, no transfer).
  double denied_value(int user) const { return denied_[user]; }
  Decision resolve(const std::vector<bool>& grants);

 private:
  const Scenario& scenario_;
  std::vector<double> denied_;
  std::vector<std::vector<std::optional<SplitResult>>> cache_;
};

}  // namespace edgesplit
