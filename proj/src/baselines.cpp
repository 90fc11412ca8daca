#include "edgesplit/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "edgesplit/errors.hpp"
#include "edgesplit/gqap.hpp"
#include "edgesplit/split_solver.hpp"

namespace edgesplit {

std::vector<int> request_order(const Scenario& scenario) {
  std::vector<int> order(scenario.users.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ua = scenario.users[a];
    const auto& ub = scenario.users[b];
    if (ua.request_slot != ub.request_slot) return ua.request_slot < ub.request_slot;
    return ua.id < ub.id;
  });
  return order;
}

namespace {

std::vector<bool> first_come_grants(const Scenario& scenario) {
  std::vector<bool> grants(scenario.users.size(), false);
  const auto order = request_order(scenario);
  const int m = std::min(scenario.user_count(), scenario.edge.b_max);
  for (int k = 0; k < m; ++k) grants[order[k]] = true;
  return grants;
}

}  // namespace

Decision baseline_all_offload_opt(const Scenario& scenario) {
  return resolve_splits(scenario, first_come_grants(scenario));
}

Decision baseline_all_offload_fixed(const Scenario& scenario) {
  const auto grants = first_come_grants(scenario);
  Decision d = all_deny_decision(scenario);
  for (std::size_t i = 0; i < grants.size(); ++i) {
    if (grants[i]) d.entries[i] = {true, scenario.pai.n_min};
  }
  return d;
}

Decision baseline_all_local(const Scenario& scenario) { return all_deny_decision(scenario); }

// ---------------------------------------------------------------------------
// Genetic algorithm over grant bit-vectors.

void validate(const GaConfig& cfg) {
  if (cfg.population < 2) throw ValidationError("ga.population must be >= 2");
  if (cfg.iterations < 1) throw ValidationError("ga.iterations must be >= 1");
  if (cfg.tournament < 1) throw ValidationError("ga.tournament must be >= 1");
  if (cfg.crossover_mix < 0.0 || cfg.crossover_mix > 1.0) {
    throw ValidationError("ga.crossover_mix must be in [0, 1]");
  }
  if (cfg.mutation_rate > 1.0) throw ValidationError("ga.mutation_rate must be <= 1");
  if (cfg.elitism < 0 || cfg.elitism > cfg.population) {
    throw ValidationError("ga.elitism must be in [0, population]");
  }
}

GaResult run_ga(const Scenario& scenario, const GaConfig& cfg) {
  validate(cfg);
  const int n = scenario.user_count();
  const int cap = scenario.edge.b_max;
  const double mutation = cfg.mutation_rate < 0.0 ? 1.0 / std::max(1, n) : cfg.mutation_rate;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, cfg.population - 1);
  SplitTable table(scenario);

  struct Individual {
    std::vector<bool> bits;
    double fitness = 0.0;
  };

  auto repair = [&](std::vector<bool>& bits) {
    std::vector<int> granted;
    for (int i = 0; i < n; ++i) {
      if (bits[i]) granted.push_back(i);
    }
    while (static_cast<int>(granted.size()) > cap) {
      const auto k = std::uniform_int_distribution<std::size_t>(0, granted.size() - 1)(rng);
      bits[granted[k]] = false;
      granted.erase(granted.begin() + static_cast<std::ptrdiff_t>(k));
    }
  };
  auto fitness = [&](const std::vector<bool>& bits) {
    return objective(scenario, table.resolve(bits));
  };

  std::vector<Individual> pop(cfg.population);
  for (auto& ind : pop) {
    ind.bits.resize(n);
    for (int i = 0; i < n; ++i) ind.bits[i] = unit(rng) < 0.5;
    repair(ind.bits);
    ind.fitness = fitness(ind.bits);
  }

  auto by_fitness = [](const Individual& a, const Individual& b) { return a.fitness > b.fitness; };
  std::stable_sort(pop.begin(), pop.end(), by_fitness);
  Individual best = pop.front();
  GaResult result;
  result.best_per_generation.push_back(best.fitness);

  auto tournament = [&]() -> const Individual& {
    int winner = pick(rng);
    for (int k = 1; k < cfg.tournament; ++k) {
      const int challenger = pick(rng);
      if (pop[challenger].fitness > pop[winner].fitness) winner = challenger;
    }
    return pop[winner];
  };

  for (int gen = 0; gen < cfg.iterations; ++gen) {
    std::vector<Individual> next;
    next.reserve(cfg.population);
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[e]);
    while (static_cast<int>(next.size()) < cfg.population) {
      const Individual& a = tournament();
      const Individual& b = tournament();
      Individual child;
      child.bits.resize(n);
      for (int i = 0; i < n; ++i) {
        child.bits[i] = unit(rng) < cfg.crossover_mix ? b.bits[i] : a.bits[i];
        if (unit(rng) < mutation) child.bits[i] = !child.bits[i];
      }
      repair(child.bits);
      child.fitness = fitness(child.bits);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    std::stable_sort(pop.begin(), pop.end(), by_fitness);
    if (pop.front().fitness > best.fitness) best = pop.front();
    result.best_per_generation.push_back(best.fitness);
  }

  result.decision = table.resolve(best.bits);
  result.best_fitness = best.fitness;
  return result;
}

Decision solve_ga(const Scenario& scenario, const GaConfig& cfg) {
  return run_ga(scenario, cfg).decision;
}

// ---------------------------------------------------------------------------
// Branch & bound on the fixed-split quadratic form.

namespace {

Decision fixed_split_decision(const Scenario& scenario, const std::vector<bool>& grants) {
  Decision d = all_deny_decision(scenario);
  for (std::size_t i = 0; i < grants.size(); ++i) {
    if (grants[i]) d.entries[i] = {true, scenario.pai.n_min};
  }
  return d;
}

class BranchAndBound {
 public:
  BranchAndBound(const Scenario& scenario, const QuadraticForm& qf)
      : qf_(qf),
        n_(scenario.user_count()),
        cap_(scenario.edge.b_max),
        order_(request_order(scenario)),
        x_(n_, false),
        decided_(n_, false),
        col_load_(n_, 0.0) {
    best_x_ = x_;
    best_ = eval_quadratic(qf_, best_x_);
  }

  void run() { visit(0, 0); }

  const std::vector<bool>& best_x() const { return best_x_; }
  double best() const { return best_; }
  long long nodes() const { return nodes_; }

 private:
  double coupling(int row_user, int col_user) const {
    return qf_.quadratic(QuadraticForm::index(row_user, kGrant),
                         QuadraticForm::index(col_user, kGrant));
  }
  double deny_value(int u) const { return qf_.linear(QuadraticForm::index(u, kDeny)); }
  double grant_base(int u) const { return qf_.linear(QuadraticForm::index(u, kGrant)); }

  // Optimistic completion: decided users keep their value under the current
  // grant set (further grants only add couplings), undecided users take the
  // better of deny and a grant that joins only the current set.
  double bound(int granted) const {
    double b = 0.0;
    for (int u = 0; u < n_; ++u) {
      if (decided_[u]) {
        b += x_[u] ? grant_base(u) - col_load_[u] : deny_value(u);
      } else {
        double best_u = deny_value(u);
        if (granted < cap_) {
          best_u = std::max(best_u, grant_base(u) - col_load_[u] - coupling(u, u));
        }
        b += best_u;
      }
    }
    return b;
  }

  void set_grant(int u, bool on) {
    const double sign = on ? 1.0 : -1.0;
    for (int c = 0; c < n_; ++c) col_load_[c] += sign * coupling(u, c);
    x_[u] = on;
  }

  void leaf() {
    const double v = eval_quadratic(qf_, x_);
    if (v > best_) {
      best_ = v;
      best_x_ = x_;
    }
  }

  void visit(int depth, int granted) {
    ++nodes_;
    if (depth == n_ || granted == cap_) {
      leaf();
      return;
    }
    if (bound(granted) <= best_) return;
    const int u = order_[depth];
    decided_[u] = true;
    if (granted < cap_) {
      set_grant(u, true);
      visit(depth + 1, granted + 1);
      set_grant(u, false);
    }
    visit(depth + 1, granted);
    decided_[u] = false;
  }

  const QuadraticForm& qf_;
  int n_;
  int cap_;
  std::vector<int> order_;
  std::vector<bool> x_;
  std::vector<bool> decided_;
  std::vector<double> col_load_;
  std::vector<bool> best_x_;
  double best_ = -std::numeric_limits<double>::infinity();
  long long nodes_ = 0;
};

}  // namespace

BnbResult run_bnb(const Scenario& scenario) {
  const QuadraticForm qf = build_quadratic(scenario, scenario.pai.n_min);
  BranchAndBound search(scenario, qf);
  search.run();
  BnbResult r;
  r.decision = fixed_split_decision(scenario, search.best_x());
  r.fixed_split_value = search.best();
  r.objective = objective(scenario, r.decision);
  r.nodes = search.nodes();
  return r;
}

Decision solve_bnb(const Scenario& scenario) { return run_bnb(scenario).decision; }

std::vector<bool> exhaustive_fixed_split(const Scenario& scenario, double* best_value) {
  const int n = scenario.user_count();
  if (n > kExhaustiveMaxUsers) {
    throw ValidationError("exhaustive search refuses " + std::to_string(n) + " users (max " +
                          std::to_string(kExhaustiveMaxUsers) + ")");
  }
  const QuadraticForm qf = build_quadratic(scenario, scenario.pai.n_min);
  std::vector<bool> best_x(n, false);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<bool> x(n);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > scenario.edge.b_max) continue;
    for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1u;
    const double v = eval_quadratic(qf, x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  if (best_value) *best_value = best;
  return best_x;
}

// ---------------------------------------------------------------------------
// Exact oracles.

Decision solve_count_oracle(const Scenario& scenario) {
  const int n = scenario.user_count();
  const int m_max = std::min(n, scenario.edge.b_max);
  SplitTable table(scenario);
  const auto order = request_order(scenario);
  std::vector<int> rank(n);
  for (int k = 0; k < n; ++k) rank[order[k]] = k;

  double denied_total = 0.0;
  for (int i = 0; i < n; ++i) denied_total += table.denied_value(i);

  double best_value = denied_total;
  std::vector<bool> best_grants(n, false);
  std::vector<int> idx(n);
  std::vector<double> gain(n);
  for (int m = 1; m <= m_max; ++m) {
    for (int i = 0; i < n; ++i) gain[i] = table.get(i, m).inner_value - table.denied_value(i);
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + m, idx.end(), [&](int a, int b) {
      if (gain[a] != gain[b]) return gain[a] > gain[b];
      return rank[a] < rank[b];
    });
    double value = denied_total;
    for (int k = 0; k < m; ++k) value += gain[idx[k]];
    if (value > best_value) {
      best_value = value;
      std::fill(best_grants.begin(), best_grants.end(), false);
      for (int k = 0; k < m; ++k) best_grants[idx[k]] = true;
    }
  }
  return table.resolve(best_grants);
}

Decision solve_exhaustive(const Scenario& scenario) {
  const int n = scenario.user_count();
  if (n > kExhaustiveMaxUsers) {
    throw ValidationError("exhaustive search refuses " + std::to_string(n) + " users (max " +
                          std::to_string(kExhaustiveMaxUsers) + ")");
  }
  SplitTable table(scenario);
  std::vector<bool> grants(n);
  Decision best = all_deny_decision(scenario);
  double best_value = objective(scenario, best);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > scenario.edge.b_max) continue;
    for (int i = 0; i < n; ++i) grants[i] = (mask >> i) & 1u;
    Decision d = table.resolve(grants);
    const double v = objective(scenario, d);
    if (v > best_value) {
      best_value = v;
      best = std::move(d);
    }
  }
  return best;
}

}  // namespace edgesplit
