#include "edgesplit/offload_env.hpp"

#include <algorithm>
#include <numeric>

#include "edgesplit/errors.hpp"
#include "edgesplit/split_solver.hpp"

namespace edgesplit {

namespace {

void deny_remaining(EnvState& s) {
  for (auto& l : s.locals) {
    if (l.status == UserStatus::kPending || l.status == UserStatus::kInProgress) {
      l.status = UserStatus::kDenied;
    }
  }
  s.global.denied += s.global.pending;
  s.global.pending = 0;
  s.cursor = s.user_count();
}

}  // namespace

EnvState reset(const Scenario& scenario) {
  if (scenario.users.empty()) throw ValidationError("reset: scenario has no users");
  std::vector<int> order(scenario.users.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ua = scenario.users[a];
    const auto& ub = scenario.users[b];
    if (ua.request_slot != ub.request_slot) return ua.request_slot < ub.request_slot;
    return ua.id < ub.id;
  });

  EnvState s;
  s.slots_per_interval = scenario.edge.slots_per_interval;
  s.locals.reserve(order.size());
  for (int idx : order) {
    const auto& u = scenario.users[idx];
    s.locals.push_back({idx, u.alpha, step_latency_local(u.device), u.request_slot,
                        UserStatus::kPending});
  }
  s.global.b_max = scenario.edge.b_max;
  s.global.edge_slope_per_gpu = scenario.edge.device.step_slope / scenario.edge.gpus;
  s.global.edge_intercept = scenario.edge.device.step_intercept;
  s.global.pending = s.user_count() - 1;
  s.cursor = 0;
  s.locals[0].status = UserStatus::kInProgress;
  if (s.global.b_max == 0) {
    // No capacity at all: every request is denied before any decision.
    s.global.pending += 1;
    deny_remaining(s);
  }
  return s;
}

bool apply_action(EnvState& s, int action) {
  if (s.terminal()) throw ContractError("step: state is terminal");
  if (action != 0 && action != 1) throw ContractError("step: action must be 0 or 1");
  auto& current = s.locals[s.cursor];
  if (action == 1) {
    current.status = UserStatus::kGranted;
    ++s.global.granted;
  } else {
    current.status = UserStatus::kDenied;
    ++s.global.denied;
  }
  if (s.global.granted >= s.global.b_max) {
    deny_remaining(s);
    return true;
  }
  if (s.global.pending == 0) {
    s.cursor = s.user_count();
    return true;
  }
  ++s.cursor;
  --s.global.pending;
  s.locals[s.cursor].status = UserStatus::kInProgress;
  return false;
}

StepResult step(const EnvState& state, int action) {
  StepResult r{state, false};
  r.done = apply_action(r.state, action);
  return r;
}

std::vector<bool> grants_of(const EnvState& state) {
  std::vector<bool> g(state.locals.size(), false);
  for (const auto& l : state.locals) g[l.user] = l.status == UserStatus::kGranted;
  return g;
}

std::vector<double> encode(const EnvState& state, int i_max, const Normalization& norm) {
  const int n = state.user_count();
  if (n > i_max) {
    throw ValidationError("encode: " + std::to_string(n) + " users exceed i_max " +
                          std::to_string(i_max));
  }
  std::vector<double> f(static_cast<std::size_t>(feature_length(i_max)), 0.0);
  const int shift = state.terminal() ? 0 : state.cursor;
  const double count_scale = static_cast<double>(i_max);
  for (int p = 0; p < i_max; ++p) {
    double* block = f.data() + p * kLocalFeatures;
    if (p < n) {
      const auto& l = state.locals[(shift + p) % n];
      block[0] = l.alpha / norm.alpha_scale;
      block[1] = l.step_latency;
      block[2] = l.request_slot / norm.slot_scale;
      block[3] = static_cast<double>(static_cast<int>(l.status));
    } else {
      block[3] = static_cast<double>(static_cast<int>(UserStatus::kDenied));
    }
  }
  double* g = f.data() + i_max * kLocalFeatures;
  g[0] = state.global.b_max / count_scale;
  g[1] = state.global.edge_slope_per_gpu;
  g[2] = state.global.edge_intercept;
  g[3] = state.global.pending / count_scale;
  g[4] = state.global.granted / count_scale;
  g[5] = state.global.denied / count_scale;
  return f;
}

Decision episode_decision(const Episode& episode, const Scenario& scenario) {
  if (!episode.complete()) throw ContractError("episode is not complete");
  return resolve_splits(scenario, grants_of(episode.final_state));
}

std::vector<double> assign_rewards(const Episode& episode, const Scenario& scenario) {
  if (!episode.complete() || (!episode.steps.empty() && !episode.steps.back().done)) {
    throw ContractError("assign_rewards: episode is not complete");
  }
  const Decision decision = episode_decision(episode, scenario);
  const int m = decision.granted_count();
  auto pai_term = [&](int user) {
    return scenario.users[user].alpha * fitted_pai(decision.entries[user].split, scenario.pai);
  };

  std::vector<double> rewards(episode.steps.size(), 0.0);
  if (episode.steps.empty()) return rewards;

  std::vector<bool> rewarded(scenario.users.size(), false);
  for (std::size_t t = 0; t + 1 < episode.steps.size(); ++t) {
    const int user = episode.steps[t].user;
    rewards[t] = pai_term(user);
    rewarded[user] = true;
  }
  double terminal = 0.0;
  for (std::size_t i = 0; i < scenario.users.size(); ++i) {
    if (!rewarded[i]) terminal += pai_term(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < scenario.users.size(); ++i) {
    terminal -= e2e_latency(scenario.users[i], decision.entries[i], m, scenario.edge, scenario.pai)
                    .total;
  }
  rewards.back() = terminal;
  return rewards;
}

}  // namespace edgesplit
