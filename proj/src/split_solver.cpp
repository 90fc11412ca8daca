#include "edgesplit/split_solver.hpp"

#include <cmath>

#include "edgesplit/errors.hpp"

namespace edgesplit {

namespace {

constexpr double kRootTolerance = 1e-6;

}  // namespace

std::string_view to_string(SplitCase c) {
  switch (c) {
    case SplitCase::kLocalDominates: return "local-dominates";
    case SplitCase::kPaiSaturated: return "pai-saturated";
    case SplitCase::kLatencySaturated: return "latency-saturated";
    case SplitCase::kInteriorRoot: return "interior-root";
  }
  return "unknown";
}

double marginal_pai_rate(double n, double alpha, const PaiParams& pai) {
  const double f = fitted_pai(n, pai);
  return alpha * pai.a_f * f * (1.0 - f);
}

double step_gap(const UserRequest& user, int granted_count, const EdgeConfig& edge) {
  return step_latency_local(user.device) - step_latency_edge(edge.device, granted_count, edge.gpus);
}

double granted_value(const UserRequest& user, int split, int granted_count,
                     const EdgeConfig& edge, const PaiParams& pai) {
  return user_value(user, DecisionEntry{true, split}, granted_count, edge, pai);
}

SplitResult optimal_split(const UserRequest& user, int granted_count, const EdgeConfig& edge,
                          const PaiParams& pai) {
  if (granted_count < 1) throw ContractError("optimal_split: granted_count must be >= 1");

  const int lo = pai.n_min;
  const int hi = pai.n_total;
  const double gap = step_gap(user, granted_count, edge);
  SplitResult out;

  auto finish = [&](int split, SplitCase c) {
    out.split = split;
    out.split_case = c;
    out.inner_value = granted_value(user, split, granted_count, edge, pai);
    return out;
  };

  if (gap <= 0.0) return finish(hi, SplitCase::kLocalDominates);
  if (marginal_pai_rate(hi, user.alpha, pai) >= gap) return finish(hi, SplitCase::kPaiSaturated);
  if (marginal_pai_rate(lo, user.alpha, pai) <= gap) return finish(lo, SplitCase::kLatencySaturated);

  // g(n) - gap is strictly decreasing on [lo, hi], positive at lo, negative at hi.
  double a = lo;
  double b = hi;
  while (b - a >= kRootTolerance) {
    const double mid = 0.5 * (a + b);
    if (marginal_pai_rate(mid, user.alpha, pai) > gap) {
      a = mid;
    } else {
      b = mid;
    }
  }
  const double root = 0.5 * (a + b);
  out.continuous_root = root;

  // Concave objective: the integer optimum is a neighbour of the real root.
  const int below = std::max(lo, static_cast<int>(std::floor(root)));
  const int above = std::min(hi, static_cast<int>(std::ceil(root)));
  const double v_below = granted_value(user, below, granted_count, edge, pai);
  const double v_above = granted_value(user, above, granted_count, edge, pai);
  out.split_case = SplitCase::kInteriorRoot;
  if (v_above >= v_below) {
    out.split = above;
    out.inner_value = v_above;
  } else {
    out.split = below;
    out.inner_value = v_below;
  }
  return out;
}

Decision resolve_splits(const Scenario& scenario, const std::vector<bool>& grants) {
  SplitTable table(scenario);
  return table.resolve(grants);
}

SplitTable::SplitTable(const Scenario& scenario)
    : scenario_(scenario), cache_(scenario.users.size()) {
  denied_.reserve(scenario.users.size());
  for (const auto& u : scenario.users) {
    denied_.push_back(user_value(u, DecisionEntry{false, scenario.pai.n_total}, 0, scenario.edge,
                                 scenario.pai));
  }
}

const SplitResult& SplitTable::get(int user, int granted_count) {
  auto& row = cache_.at(user);
  if (static_cast<int>(row.size()) <= granted_count) row.resize(granted_count + 1);
  auto& slot = row[granted_count];
  if (!slot) {
    slot = optimal_split(scenario_.users[user], granted_count, scenario_.edge, scenario_.pai);
  }
  return *slot;
}

Decision SplitTable::resolve(const std::vector<bool>& grants) {
  if (grants.size() != scenario_.users.size()) {
    throw ContractError("resolve_splits: grant vector size mismatch");
  }
  int m = 0;
  for (bool g : grants) m += g ? 1 : 0;
  Decision d;
  d.entries.resize(grants.size());
  for (std::size_t i = 0; i < grants.size(); ++i) {
    if (grants[i]) {
      d.entries[i] = {true, get(static_cast<int>(i), m).split};
    } else {
      d.entries[i] = {false, scenario_.pai.n_total};
    }
  }
  return d;
}

}  // namespace edgesplit
