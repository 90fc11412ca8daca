#pragma once

#include <vector>

#include "edgesplit/qoe.hpp"
#include "edgesplit/scenario.hpp"

namespace edgesplit {

enum class UserStatus : int { kPending = 0, kInProgress = 1, kGranted = 2, kDenied = 3 };

struct LocalSubState {
  int user = 0;             // index into Scenario::users
  double alpha = 0.0;
  double step_latency = 0.0;  // k_i + h_i, seconds
  int request_slot = 0;
  UserStatus status = UserStatus::kPending;

  bool operator==(const LocalSubState&) const = default;
};

struct GlobalSubState {
  int b_max = 0;
  double edge_slope_per_gpu = 0.0;  // k_e / G
  double edge_intercept = 0.0;      // h_e
  int pending = 0;
  int granted = 0;
  int denied = 0;

  bool operator==(const GlobalSubState&) const = default;
};

// Users are stored in processing order: ascending request slot, ties by id.
// `cursor` is the position of the in-progress user, or locals.size() once the
// episode is over.
struct EnvState {
  std::vector<LocalSubState> locals;
  GlobalSubState global;
  int cursor = 0;
  int slots_per_interval = 1;

  bool terminal() const { return cursor >= static_cast<int>(locals.size()); }
  int user_count() const { return static_cast<int>(locals.size()); }
  bool operator==(const EnvState&) const = default;
};

EnvState reset(const Scenario& scenario);

struct StepResult {
  EnvState state;
  bool done = false;
};

// Pure transition. Throws ContractError on a terminal state or bad action.
StepResult step(const EnvState& state, int action);

// In-place variant of step(); returns done.
bool apply_action(EnvState& state, int action);

// Grant vector indexed by user id, read from the statuses.
std::vector<bool> grants_of(const EnvState& state);

struct Normalization {
  double alpha_scale = 1.0;
  double slot_scale = 1.0;
};

// Feature layout: i_max blocks of [alpha, step latency, request slot, status
// token] starting at the in-progress user and wrapping around, padded with
// zero statics and the denied token, then six globals
// [b_max, k_e/G, h_e, pending, granted, denied].
constexpr int kLocalFeatures = 4;
constexpr int kGlobalFeatures = 6;
inline int feature_length(int i_max) { return i_max * kLocalFeatures + kGlobalFeatures; }

std::vector<double> encode(const EnvState& state, int i_max, const Normalization& norm);

struct Transition {
  EnvState state;
  int action = 0;
  EnvState next;
  bool done = false;
  int user = 0;
};

struct Episode {
  std::vector<Transition> steps;
  EnvState final_state;

  bool complete() const { return final_state.terminal(); }
};

// Runs one episode; `choose(const EnvState&)` returns 0 (deny) or 1 (grant).
template <typename Choose>
Episode run_episode(const Scenario& scenario, Choose&& choose) {
  Episode ep;
  EnvState state = reset(scenario);
  while (!state.terminal()) {
    Transition t;
    t.state = state;
    t.user = state.locals[state.cursor].user;
    t.action = choose(static_cast<const EnvState&>(state));
    t.done = apply_action(state, t.action);
    t.next = state;
    ep.steps.push_back(std::move(t));
  }
  ep.final_state = std::move(state);
  return ep;
}

// Final decision with optimal splits for the final grant count.
Decision episode_decision(const Episode& episode, const Scenario& scenario);

// Post-episode rewards. Non-terminal step t earns alpha_t F(n_t); the terminal
// step earns the PAI of every remaining user minus the total latency of all
// users, so the rewards sum to the objective of the final decision.
std::vector<double> assign_rewards(const Episode& episode, const Scenario& scenario);

}  // namespace edgesplit
