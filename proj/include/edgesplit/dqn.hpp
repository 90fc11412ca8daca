#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "edgesplit/offload_env.hpp"
#include "edgesplit/qnet.hpp"
#include "edgesplit/replay.hpp"
#include "edgesplit/scenario.hpp"

namespace edgesplit {

struct TrainHyper {
  double learning_rate = 1e-4;
  std::size_t batch = 128;
  std::size_t terminal_per_batch = 16;
  long long target_sync = 2000;
  double epsilon_start = 0.5;
  double epsilon_end = 0.001;
  double temperature_start = 5.0;
  double temperature_end = 0.01;
  double priority_exponent = 0.7;
  double importance_exponent = 0.3;
  double priority_offset = 2e-5;
  double gamma = 1.0;
  double reward_scale = 0.1;
  std::size_t replay_capacity = 400000;
  int episodes = 3000;
  // Environment steps over which epsilon and temperature decay linearly.
  // Zero means episodes * (users of the first sampled scenario).
  long long decay_steps = 0;
  // Gradient steps per environment step.
  int train_every = 1;
  int hidden = 256;
  int hidden_layers = 3;

  ReplayConfig replay() const;
};

void validate(const TrainHyper& hyper);
nlohmann::json to_json(const TrainHyper& hyper);
TrainHyper train_hyper_from_json(const nlohmann::json& j);

// Linear schedule evaluated at environment step `t` of `horizon`.
double linear_schedule(double start, double end, long long t, long long horizon);

// Hybrid exploration: with probability epsilon sample from softmax(q / tau),
// otherwise take the argmax with ties going to deny.
int select_action(const QNetwork& net, const std::vector<double>& features, double epsilon,
                  double temperature, std::mt19937_64& rng);
int select_action(const std::array<double, 2>& q, double epsilon, double temperature,
                  std::mt19937_64& rng);
int greedy_action(const std::array<double, 2>& q);

// y = r for terminal transitions, r + gamma * max_a Q_target(s', a) otherwise.
Eigen::VectorXd td_targets(const SampledBatch& batch, const QNetwork& target_net, double gamma);

// Owns the online and target networks, the optimizer and the replay memory.
class DqnTrainer {
 public:
  DqnTrainer(const QNetworkShape& shape, const TrainHyper& hyper, std::uint64_t seed);

  QNetwork& net() { return net_; }
  const QNetwork& net() const { return net_; }
  const QNetwork& target_net() const { return target_; }
  ReplayBuffer& buffer() { return buffer_; }
  const TrainHyper& hyper() const { return hyper_; }
  long long train_steps() const { return train_steps_; }
  std::mt19937_64& rng() { return rng_; }

  // One stratified PER gradient step. nullopt when the buffer cannot yet
  // supply a full batch.
  std::optional<double> train_step();

 private:
  TrainHyper hyper_;
  QNetwork net_;
  QNetwork target_;
  Adam adam_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  long long train_steps_ = 0;
  std::vector<Eigen::MatrixXd> grads_;
};

enum class TrainScope { kGeneral, kGpuConstrained, kSpecific };
std::string to_string(TrainScope scope);
TrainScope parse_scope(const std::string& text);

// Produces the scenario for each training episode.
class ScenarioSampler {
 public:
  // Single fixed scenario.
  static ScenarioSampler specific(Scenario scenario, const GeneratorConfig& gen);
  // Seed pool cycled over episodes; user count drawn per seed from
  // [users_min, users_max] and GPU count from `gpu_choices`.
  static ScenarioSampler pooled(TrainScope scope, std::uint64_t master_seed, int pool_size,
                                int users_min, int users_max, std::vector<int> gpu_choices,
                                const GeneratorConfig& gen, const EdgeConfig& edge,
                                const PaiParams& pai);

  TrainScope scope() const { return scope_; }
  int i_max() const { return i_max_; }
  const Normalization& normalization() const { return norm_; }
  int pool_size() const { return static_cast<int>(pool_.size()); }
  const Scenario& operator()(long long episode) const;

 private:
  TrainScope scope_ = TrainScope::kSpecific;
  int i_max_ = 1;
  Normalization norm_;
  std::vector<Scenario> pool_;
};

struct TrainedPolicy {
  QNetwork net;
  Normalization norm;
  std::string scope;
  std::uint64_t seed = 0;
  int episodes = 0;

  int i_max() const { return net.shape().i_max; }
};

struct TrainResult {
  TrainedPolicy policy;
  std::vector<double> returns;  // unscaled episode return (= objective)
  long long env_steps = 0;
  long long train_steps = 0;
};

using EpisodeCallback = std::function<void(int episode, double ret)>;

TrainResult train(const ScenarioSampler& sampler, const TrainHyper& hyper, std::uint64_t seed,
                  const EpisodeCallback& on_episode = {});

// Runs the environment with the greedy policy and resolves splits.
Decision greedy_solve(const TrainedPolicy& policy, const Scenario& scenario);

nlohmann::json to_json(const TrainedPolicy& policy);
TrainedPolicy policy_from_json(const nlohmann::json& j);
void save_policy(const TrainedPolicy& policy, const std::filesystem::path& path);
TrainedPolicy load_policy(const std::filesystem::path& path);

// Trailing moving average with a window of `window` episodes.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

}  // namespace edgesplit
