#pragma once

#include <vector>

#include "edgesplit/scenario.hpp"

namespace edgesplit {

// All latencies are in seconds. The objective of a user is
// alpha * F(split) - total latency, i.e. a weighted PAI minus seconds; alpha
// carries the seconds-per-PAI conversion.

double step_latency_local(const DeviceProfile& device);

// Edge per-step latency with data-parallel batching over `gpus`:
// k_e * (batch / gpus) + h_e.
double step_latency_edge(const DeviceProfile& device, int batch, int gpus);

// Fitted split-point PAI curve, evaluable for real-valued split.
double fitted_pai(double split, const PaiParams& pai);

// Composite PAI from pre-aggregated CLIP and LPIPS means.
double compose_pai(double clip_mean, double lpips_mean, const PaiParams& pai);

struct DecisionEntry {
  bool granted = false;
  int split = 0;

  bool operator==(const DecisionEntry&) const = default;
};

struct Decision {
  std::vector<DecisionEntry> entries;

  int granted_count() const;
  std::vector<bool> grants() const;
  bool operator==(const Decision&) const = default;
};

struct LatencyBreakdown {
  double rtt = 0.0;
  double uplink_downlink = 0.0;
  double edge_compute = 0.0;
  double local_compute = 0.0;
  double total = 0.0;
};

// Wait from the request slot to the end of the decision interval.
double rtt_latency(const UserRequest& user, const EdgeConfig& edge);

// Uplink + downlink time with the bandwidth split equally among `granted_count`.
double transfer_latency(const UserRequest& user, int granted_count, const EdgeConfig& edge);

LatencyBreakdown e2e_latency(const UserRequest& user, const DecisionEntry& entry,
                             int granted_count, const EdgeConfig& edge, const PaiParams& pai);

// Throws ConstraintError naming the violated constraint.
void check_feasible(const Scenario& scenario, const Decision& decision);

struct UserOutcome {
  LatencyBreakdown latency;
  double pai_term = 0.0;  // alpha * F(split)
  double value = 0.0;     // pai_term - latency.total
};

struct Evaluation {
  std::vector<UserOutcome> users;
  double pai_sum = 0.0;
  double latency_sum = 0.0;
  double objective = 0.0;
  int granted_count = 0;
};

Evaluation evaluate(const Scenario& scenario, const Decision& decision);
double objective(const Scenario& scenario, const Decision& decision);

// Value alpha * F(split) - L of one user under a given final grant count.
double user_value(const UserRequest& user, const DecisionEntry& entry, int granted_count,
                  const EdgeConfig& edge, const PaiParams& pai);

Decision all_deny_decision(const Scenario& scenario);

nlohmann::json to_json(const Decision& decision);
nlohmann::json to_json(const LatencyBreakdown& latency);

}  // namespace edgesplit
