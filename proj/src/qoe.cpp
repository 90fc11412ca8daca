#include "edgesplit/qoe.hpp"

#include <cmath>
#include <string>

#include "edgesplit/errors.hpp"

namespace edgesplit {

double step_latency_local(const DeviceProfile& device) {
  return device.step_slope * 1.0 + device.step_intercept;
}

double step_latency_edge(const DeviceProfile& device, int batch, int gpus) {
  if (batch < 1 || gpus < 1) {
    throw ContractError("step_latency_edge: batch and gpus must be >= 1");
  }
  return device.step_slope * (static_cast<double>(batch) / static_cast<double>(gpus)) +
         device.step_intercept;
}

double fitted_pai(double split, const PaiParams& pai) {
  return 1.0 / (1.0 + std::exp(-pai.a_f * (split - pai.b_f)));
}

double compose_pai(double clip_mean, double lpips_mean, const PaiParams& pai) {
  const double modulation = 1.0 / (1.0 + std::exp(-pai.sigma_a * (lpips_mean - pai.sigma_b)));
  return pai.kappa_pai * clip_mean * modulation;
}

int Decision::granted_count() const {
  int m = 0;
  for (const auto& e : entries) m += e.granted ? 1 : 0;
  return m;
}

std::vector<bool> Decision::grants() const {
  std::vector<bool> g(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) g[i] = entries[i].granted;
  return g;
}

double rtt_latency(const UserRequest& user, const EdgeConfig& edge) {
  return static_cast<double>(edge.slots_per_interval - user.request_slot) * edge.slot_duration;
}

double transfer_latency(const UserRequest& user, int granted_count, const EdgeConfig& edge) {
  return (user.prompt_bits + user.intermediate_bits) * static_cast<double>(granted_count) /
         (edge.spectral_efficiency * edge.bandwidth_hz);
}

LatencyBreakdown e2e_latency(const UserRequest& user, const DecisionEntry& entry,
                             int granted_count, const EdgeConfig& edge, const PaiParams& pai) {
  LatencyBreakdown out;
  out.rtt = rtt_latency(user, edge);
  out.local_compute = static_cast<double>(entry.split) * step_latency_local(user.device);
  if (entry.granted) {
    if (granted_count < 1) {
      throw ContractError("e2e_latency: granted user requires granted_count >= 1");
    }
    out.uplink_downlink = transfer_latency(user, granted_count, edge);
    out.edge_compute = static_cast<double>(pai.n_total - entry.split) *
                       step_latency_edge(edge.device, granted_count, edge.gpus);
  }
  out.total = out.rtt + out.uplink_downlink + out.edge_compute + out.local_compute;
  return out;
}

void check_feasible(const Scenario& scenario, const Decision& decision) {
  if (decision.entries.size() != scenario.users.size()) {
    throw ConstraintError("C1", "decision has " + std::to_string(decision.entries.size()) +
                                    " entries for " + std::to_string(scenario.users.size()) +
                                    " users");
  }
  const auto& pai = scenario.pai;
  for (std::size_t i = 0; i < decision.entries.size(); ++i) {
    const auto& e = decision.entries[i];
    if (e.split < pai.n_min || e.split > pai.n_total) {
      throw ConstraintError("C3", "user " + std::to_string(i) + " split " +
                                      std::to_string(e.split) + " outside [" +
                                      std::to_string(pai.n_min) + ", " +
                                      std::to_string(pai.n_total) + "]");
    }
    if (!e.granted && e.split != pai.n_total) {
      throw ConstraintError("C4", "denied user " + std::to_string(i) + " has split " +
                                      std::to_string(e.split));
    }
  }
  const int m = decision.granted_count();
  if (m > scenario.edge.b_max) {
    throw ConstraintError("C2", std::to_string(m) + " grants exceed b_max " +
                                    std::to_string(scenario.edge.b_max));
  }
}

double user_value(const UserRequest& user, const DecisionEntry& entry, int granted_count,
                  const EdgeConfig& edge, const PaiParams& pai) {
  const auto lat = e2e_latency(user, entry, granted_count, edge, pai);
  return user.alpha * fitted_pai(entry.split, pai) - lat.total;
}

Evaluation evaluate(const Scenario& scenario, const Decision& decision) {
  check_feasible(scenario, decision);
  Evaluation ev;
  ev.granted_count = decision.granted_count();
  ev.users.reserve(scenario.users.size());
  for (std::size_t i = 0; i < scenario.users.size(); ++i) {
    const auto& user = scenario.users[i];
    UserOutcome u;
    u.latency = e2e_latency(user, decision.entries[i], ev.granted_count, scenario.edge,
                            scenario.pai);
    u.pai_term = user.alpha * fitted_pai(decision.entries[i].split, scenario.pai);
    u.value = u.pai_term - u.latency.total;
    ev.pai_sum += u.pai_term;
    ev.latency_sum += u.latency.total;
    ev.objective += u.value;
    ev.users.push_back(u);
  }
  return ev;
}

double objective(const Scenario& scenario, const Decision& decision) {
  return evaluate(scenario, decision).objective;
}

Decision all_deny_decision(const Scenario& scenario) {
  Decision d;
  d.entries.assign(scenario.users.size(), DecisionEntry{false, scenario.pai.n_total});
  return d;
}

nlohmann::json to_json(const LatencyBreakdown& latency) {
  return {{"rtt", latency.rtt},
          {"uplink_downlink", latency.uplink_downlink},
          {"edge_compute", latency.edge_compute},
          {"local_compute", latency.local_compute},
          {"total", latency.total}};
}

nlohmann::json to_json(const Decision& decision) {
  auto arr = nlohmann::json::array();
  for (const auto& e : decision.entries) {
    arr.push_back({{"granted", e.granted}, {"split", e.split}});
  }
  return arr;
}

}  // namespace edgesplit
