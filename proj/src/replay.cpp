#include "edgesplit/replay.hpp"

#include <algorithm>
#include <cmath>

#include "edgesplit/errors.hpp"

namespace edgesplit {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
  while (base_ < capacity_) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t i, double value) {
  std::size_t node = base_ + i;
  const double diff = value - nodes_[node];
  for (; node >= 1; node >>= 1) nodes_[node] += diff;
  // Recompute the leaf exactly; accumulated sums above may drift by ulps.
  nodes_[base_ + i] = value;
}

std::size_t SumTree::find(double mass) const {
  std::size_t node = 1;
  while (node < base_) {
    const std::size_t left = 2 * node;
    if (mass < nodes_[left] || nodes_[left + 1] <= 0.0) {
      node = left;
    } else {
      mass -= nodes_[left];
      node = left + 1;
    }
  }
  return std::min(node - base_, capacity_ - 1);
}

PriorityPartition::PriorityPartition(std::size_t capacity, double priority_exponent)
    : exponent_(priority_exponent), tree_(capacity) {
  if (capacity == 0) throw ValidationError("replay partition capacity must be > 0");
}

std::size_t PriorityPartition::push(StoredTransition t) {
  const std::size_t slot = next_;
  if (data_.size() < tree_.capacity()) {
    data_.push_back(std::move(t));
  } else {
    data_[slot] = std::move(t);
  }
  tree_.set(slot, std::pow(max_priority_, exponent_));
  next_ = (next_ + 1) % tree_.capacity();
  return slot;
}

void PriorityPartition::update(std::size_t slot, double priority) {
  max_priority_ = std::max(max_priority_, priority);
  tree_.set(slot, std::pow(priority, exponent_));
}

double PriorityPartition::probability(std::size_t slot) const {
  return tree_.leaf(slot) / tree_.total();
}

std::vector<std::size_t> PriorityPartition::sample(std::size_t k, std::mt19937_64& rng) const {
  std::vector<std::size_t> out;
  out.reserve(k);
  const double total = tree_.total();
  const double segment = total / static_cast<double>(k);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t j = 0; j < k; ++j) {
    const double mass = (static_cast<double>(j) + unit(rng)) * segment;
    std::size_t slot = tree_.find(std::min(mass, std::nextafter(total, 0.0)));
    if (slot >= data_.size()) slot = data_.size() - 1;
    out.push_back(slot);
  }
  return out;
}

ReplayBuffer::ReplayBuffer(const ReplayConfig& cfg)
    : cfg_(cfg),
      terminal_(std::max<std::size_t>(1, cfg.capacity * cfg.terminal_per_batch / cfg.batch),
                cfg.priority_exponent),
      regular_(std::max<std::size_t>(
                   1, cfg.capacity - cfg.capacity * cfg.terminal_per_batch / cfg.batch),
               cfg.priority_exponent) {
  if (cfg.batch == 0 || cfg.terminal_per_batch > cfg.batch) {
    throw ValidationError("replay: batch must be > 0 and hold the terminal share");
  }
}

void ReplayBuffer::push(StoredTransition t) {
  if (t.done) {
    terminal_.push(std::move(t));
  } else {
    regular_.push(std::move(t));
  }
}

bool ReplayBuffer::ready() const {
  return terminal_.size() >= cfg_.terminal_per_batch &&
         regular_.size() >= cfg_.batch - cfg_.terminal_per_batch;
}

SampledBatch ReplayBuffer::sample(std::mt19937_64& rng) const {
  if (!ready()) throw ContractError("replay: not enough transitions to sample a batch");
  const std::size_t n_term = cfg_.terminal_per_batch;
  const std::size_t n_reg = cfg_.batch - n_term;
  const auto term_slots = terminal_.sample(n_term, rng);
  const auto reg_slots = regular_.sample(n_reg, rng);

  const Eigen::Index features = static_cast<Eigen::Index>(
      n_reg > 0 ? regular_.at(reg_slots[0]).state.size() : terminal_.at(term_slots[0]).state.size());
  const Eigen::Index batch = static_cast<Eigen::Index>(cfg_.batch);

  SampledBatch out;
  out.states.resize(features, batch);
  out.next_states.resize(features, batch);
  out.actions.resize(cfg_.batch);
  out.rewards.resize(batch);
  out.done.resize(cfg_.batch);
  out.weights.resize(batch);
  out.handles.reserve(cfg_.batch);

  Eigen::Index col = 0;
  auto take = [&](const PriorityPartition& part, std::size_t slot, bool is_terminal) {
    const auto& t = part.at(slot);
    for (Eigen::Index r = 0; r < features; ++r) {
      out.states(r, col) = t.state[r];
      out.next_states(r, col) = t.next[r];
    }
    out.actions[col] = t.action;
    out.rewards[col] = t.reward;
    out.done[col] = t.done;
    const double n = static_cast<double>(part.size());
    out.weights[col] = std::pow(n * part.probability(slot), -cfg_.importance_exponent);
    out.handles.emplace_back(is_terminal, slot);
    ++col;
  };
  for (auto slot : term_slots) take(terminal_, slot, true);
  for (auto slot : reg_slots) take(regular_, slot, false);
  out.weights /= out.weights.maxCoeff();
  return out;
}

void ReplayBuffer::update_priorities(const SampledBatch& batch, const Eigen::VectorXd& td_errors) {
  for (std::size_t k = 0; k < batch.handles.size(); ++k) {
    const auto [is_terminal, slot] = batch.handles[k];
    const double p = std::abs(td_errors[static_cast<Eigen::Index>(k)]) + cfg_.priority_offset;
    (is_terminal ? terminal_ : regular_).update(slot, p);
  }
}

}  // namespace edgesplit
