#include "edgesplit/gqap.hpp"

#include "edgesplit/errors.hpp"
#include "edgesplit/qoe.hpp"

namespace edgesplit {

QuadraticForm::QuadraticForm(int users)
    : users_(users),
      linear_(static_cast<std::size_t>(2 * users), 0.0),
      quadratic_(static_cast<std::size_t>(4 * users * users), 0.0) {}

QuadraticForm build_quadratic(const Scenario& scenario, int fixed_split) {
  const auto& pai = scenario.pai;
  const auto& edge = scenario.edge;
  if (fixed_split < pai.n_min || fixed_split > pai.n_total) {
    throw ContractError("build_quadratic: fixed_split outside [n_min, n_total]");
  }
  const int n_users = scenario.user_count();
  QuadraticForm qf(n_users);
  const double offloaded = static_cast<double>(pai.n_total - fixed_split);
  const double edge_pair = offloaded * edge.device.step_slope / edge.gpus;
  const double f_full = fitted_pai(pai.n_total, pai);
  const double f_split = fitted_pai(fixed_split, pai);

  for (int i = 0; i < n_users; ++i) {
    const auto& u = scenario.users[i];
    const double local_step = step_latency_local(u.device);
    const double rtt = rtt_latency(u, edge);

    // Deny: alpha F(N) minus full local compute and RTT.
    qf.linear(QuadraticForm::index(i, kDeny)) =
        u.alpha * f_full - (pai.n_total * local_step + rtt);
    // Grant: PAI at the fixed split, local tail, constant part of edge compute, RTT.
    const double edge_const = offloaded * edge.device.step_intercept;
    qf.linear(QuadraticForm::index(i, kGrant)) =
        u.alpha * f_split - (fixed_split * local_step + edge_const + rtt);

    // Pair couplings (i', grant) x (i, grant): the transfer coefficient uses the
    // column user's own data size; the batching coefficient is shared.
    const double transfer_pair =
        (u.prompt_bits + u.intermediate_bits) / (edge.spectral_efficiency * edge.bandwidth_hz);
    const int col = QuadraticForm::index(i, kGrant);
    for (int ip = 0; ip < n_users; ++ip) {
      qf.quadratic(QuadraticForm::index(ip, kGrant), col) = transfer_pair + edge_pair;
    }
  }
  return qf;
}

QuadraticForm absorb_linear(const QuadraticForm& qf) {
  if (qf.absorbed()) throw ContractError("absorb_linear: form already absorbed");
  QuadraticForm out(qf.users());
  const int n = qf.size();
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      out.quadratic(r, c) = -qf.quadratic(r, c);
    }
    out.quadratic(r, r) = qf.linear(r) - qf.quadratic(r, r);
  }
  out.mark_absorbed();
  return out;
}

double eval_quadratic(const QuadraticForm& qf, const std::vector<bool>& grants) {
  if (static_cast<int>(grants.size()) != qf.users()) {
    throw ContractError("eval_quadratic: grant vector size mismatch");
  }
  // Active variable indices: exactly one per user.
  std::vector<int> active;
  active.reserve(grants.size());
  for (int i = 0; i < qf.users(); ++i) {
    active.push_back(QuadraticForm::index(i, grants[i] ? kGrant : kDeny));
  }
  double value = 0.0;
  if (qf.absorbed()) {
    for (int c : active) {
      for (int r : active) value += qf.quadratic(r, c);
    }
    return value;
  }
  for (int c : active) {
    value += qf.linear(c);
    for (int r : active) value -= qf.quadratic(r, c);
  }
  return value;
}

nlohmann::json to_json(const QuadraticForm& qf) {
  nlohmann::json linear = nlohmann::json::array();
  for (int k = 0; k < qf.size(); ++k) linear.push_back(qf.linear(k));
  nlohmann::json entries = nlohmann::json::array();
  for (int r = 0; r < qf.size(); ++r) {
    for (int c = 0; c < qf.size(); ++c) {
      const double v = qf.quadratic(r, c);
      if (v != 0.0) entries.push_back({r, c, v});
    }
  }
  return {{"users", qf.users()},
          {"handlings", {"grant", "deny"}},
          {"variable_index", "2*user + handling"},
          {"absorbed", qf.absorbed()},
          {"sense", qf.absorbed() ? "max x'Qx" : "max c'x - x'Ax"},
          {"linear", linear},
          {"quadratic", entries}};
}

}  // namespace edgesplit
