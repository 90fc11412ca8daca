#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "edgesplit/scenario.hpp"

namespace edgesplit {

// Handling index within a user's pair of binary variables.
enum Handling : int { kGrant = 0, kDeny = 1 };

// Binary quadratic form over the 2*I variables x_i^j (j in {grant, deny}).
// Variable (i, j) has flat index 2*i + j.
//
// Before absorption the value of x is
//     sum_ij linear[ij] x_ij - sum_{i'j', ij} quadratic[i'j'][ij] x_i'j' x_ij,
// where `quadratic` holds the non-negative latency couplings. After absorption
// the linear part lives on the diagonal and the value is
//     sum_{i'j', ij} quadratic[i'j'][ij] x_i'j' x_ij.
class QuadraticForm {
 public:
  QuadraticForm() = default;
  explicit QuadraticForm(int users);

  int users() const { return users_; }
  int size() const { return 2 * users_; }
  bool absorbed() const { return absorbed_; }

  static int index(int user, Handling h) { return 2 * user + h; }

  double linear(int idx) const { return linear_[idx]; }
  double& linear(int idx) { return linear_[idx]; }
  double quadratic(int row, int col) const { return quadratic_[row * size() + col]; }
  double& quadratic(int row, int col) { return quadratic_[row * size() + col]; }

  void mark_absorbed() { absorbed_ = true; }

 private:
  int users_ = 0;
  bool absorbed_ = false;
  std::vector<double> linear_;
  std::vector<double> quadratic_;
};

// Fixed-split form: every granted user runs `fixed_split` steps locally.
QuadraticForm build_quadratic(const Scenario& scenario, int fixed_split);

// Moves the linear term onto the diagonal using x^2 = x for binary x.
QuadraticForm absorb_linear(const QuadraticForm& qf);

// `grants[i]` is x_i^g; x_i^d is its complement, so C1 holds by construction.
double eval_quadratic(const QuadraticForm& qf, const std::vector<bool>& grants);

// Sparse triplet export for external solvers.
nlohmann::json to_json(const QuadraticForm& qf);

}  // namespace edgesplit
