#pragma once

// Reference evaluators written straight from the model formulas. They share no
// code with the library beyond the plain data types, so agreement is a real
// cross-check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "edgesplit/scenario.hpp"

namespace testsupport {

using edgesplit::Scenario;

inline long double ref_sigmoid(long double n, const edgesplit::PaiParams& p) {
  return 1.0L / (1.0L + std::exp(-static_cast<long double>(p.a_f) * (n - p.b_f)));
}

// Value of one user: alpha F(n) - (rtt + transfer + edge compute + local compute).
inline long double ref_user_value(const Scenario& s, int i, bool granted, int split, int m) {
  const auto& u = s.users[i];
  const auto& e = s.edge;
  const long double local_step = static_cast<long double>(u.device.step_slope) + u.device.step_intercept;
  long double latency = static_cast<long double>(e.slots_per_interval - u.request_slot) * e.slot_duration;
  latency += split * local_step;
  if (granted) {
    const long double edge_step =
        static_cast<long double>(e.device.step_slope) * m / e.gpus + e.device.step_intercept;
    latency += (static_cast<long double>(u.prompt_bits) + u.intermediate_bits) * m /
               (static_cast<long double>(e.spectral_efficiency) * e.bandwidth_hz);
    latency += (s.pai.n_total - split) * edge_step;
  }
  return u.alpha * ref_sigmoid(split, s.pai) - latency;
}

inline long double ref_objective(const Scenario& s, const std::vector<bool>& grants,
                                 const std::vector<int>& splits) {
  int m = 0;
  for (bool g : grants) m += g;
  long double total = 0.0L;
  for (int i = 0; i < s.user_count(); ++i) total += ref_user_value(s, i, grants[i], splits[i], m);
  return total;
}

// Best integer split of a granted user at grant count m by scanning the grid.
inline long double ref_best_granted(const Scenario& s, int i, int m, int* arg = nullptr) {
  long double best = -INFINITY;
  for (int n = s.pai.n_min; n <= s.pai.n_total; ++n) {
    const long double v = ref_user_value(s, i, true, n, m);
    if (v > best) {
      best = v;
      if (arg) *arg = n;
    }
  }
  return best;
}

// Exhaustive optimum over grant patterns with grid-searched splits.
inline long double ref_exhaustive(const Scenario& s) {
  const int n = s.user_count();
  long double best = -INFINITY;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int m = __builtin_popcount(mask);
    if (m > s.edge.b_max) continue;
    long double v = 0.0L;
    for (int i = 0; i < n; ++i) {
      v += (mask >> i & 1u) ? ref_best_granted(s, i, m)
                            : ref_user_value(s, i, false, s.pai.n_total, m);
    }
    best = std::max(best, v);
  }
  return best;
}

inline Scenario random_scenario(std::uint64_t seed, int users, int gpus = 8, int b_max = 10) {
  auto gen = edgesplit::default_generator_config();
  gen.user_count = users;
  auto edge = edgesplit::default_edge_config();
  edge.gpus = gpus;
  edge.b_max = b_max;
  return edgesplit::generate_scenario(seed, gen, edge, edgesplit::PaiParams{});
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testsupport
