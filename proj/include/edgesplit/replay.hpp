#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace edgesplit {

// Binary sum tree over a fixed number of leaves.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 0);

  std::size_t capacity() const { return capacity_; }
  double total() const { return nodes_.empty() ? 0.0 : nodes_[1]; }
  double leaf(std::size_t i) const { return nodes_[base_ + i]; }
  void set(std::size_t i, double value);
  // Leaf whose cumulative range contains `mass` in [0, total()).
  std::size_t find(double mass) const;

 private:
  std::size_t capacity_ = 0;
  std::size_t base_ = 1;
  std::vector<double> nodes_;
};

struct StoredTransition {
  std::vector<float> state;
  int action = 0;
  double reward = 0.0;
  std::vector<float> next;
  bool done = false;
};

// One ring-buffer partition with proportional priorities. New entries overwrite
// the oldest once full.
class PriorityPartition {
 public:
  PriorityPartition(std::size_t capacity, double priority_exponent);

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return tree_.capacity(); }
  double max_priority() const { return max_priority_; }

  // Inserts with the current maximum priority. Returns the slot used.
  std::size_t push(StoredTransition t);
  // Raw priority p (before the exponent).
  void update(std::size_t slot, double priority);
  double probability(std::size_t slot) const;
  const StoredTransition& at(std::size_t slot) const { return data_[slot]; }
  // Stratified proportional sampling of k slots.
  std::vector<std::size_t> sample(std::size_t k, std::mt19937_64& rng) const;

 private:
  double exponent_;
  double max_priority_ = 1.0;
  std::size_t next_ = 0;
  SumTree tree_;
  std::vector<StoredTransition> data_;
};

struct ReplayConfig {
  std::size_t capacity = 400000;
  std::size_t batch = 128;
  std::size_t terminal_per_batch = 16;  // 1:7 terminal to non-terminal
  double priority_exponent = 0.7;
  double importance_exponent = 0.3;
  double priority_offset = 2e-5;
};

struct SampledBatch {
  Eigen::MatrixXd states;  // feature length x batch
  Eigen::MatrixXd next_states;
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  std::vector<bool> done;
  Eigen::VectorXd weights;  // importance-sampling weights, max-normalized
  std::vector<std::pair<bool, std::size_t>> handles;  // (terminal partition?, slot)
};

// Terminal and non-terminal transitions live in separate partitions whose
// capacities split the total in the batch ratio.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(const ReplayConfig& cfg);

  const ReplayConfig& config() const { return cfg_; }
  std::size_t size() const { return terminal_.size() + regular_.size(); }
  const PriorityPartition& terminal() const { return terminal_; }
  const PriorityPartition& regular() const { return regular_; }

  void push(StoredTransition t);
  bool ready() const;
  SampledBatch sample(std::mt19937_64& rng) const;
  // Sets priority |td| + offset for each sampled transition.
  void update_priorities(const SampledBatch& batch, const Eigen::VectorXd& td_errors);

 private:
  ReplayConfig cfg_;
  PriorityPartition terminal_;
  PriorityPartition regular_;
};

}  // namespace edgesplit
