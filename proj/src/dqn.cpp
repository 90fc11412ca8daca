#include "edgesplit/dqn.hpp"

#include <algorithm>
#include <cmath>

#include "edgesplit/errors.hpp"
#include "edgesplit/split_solver.hpp"

namespace edgesplit {

ReplayConfig TrainHyper::replay() const {
  ReplayConfig cfg;
  cfg.capacity = replay_capacity;
  cfg.batch = batch;
  cfg.terminal_per_batch = terminal_per_batch;
  cfg.priority_exponent = priority_exponent;
  cfg.importance_exponent = importance_exponent;
  cfg.priority_offset = priority_offset;
  return cfg;
}

void validate(const TrainHyper& h) {
  auto require = [](bool ok, const char* field, const char* rule) {
    if (!ok) throw ValidationError(std::string("train.") + field + " " + rule);
  };
  require(h.learning_rate > 0.0, "learning_rate", "must be > 0");
  require(h.batch > 0, "batch", "must be > 0");
  require(h.terminal_per_batch <= h.batch, "terminal_per_batch", "must be <= batch");
  require(h.target_sync > 0, "target_sync", "must be > 0");
  require(h.epsilon_start >= h.epsilon_end && h.epsilon_end >= 0.0 && h.epsilon_start <= 1.0,
          "epsilon", "schedule must decrease within [0, 1]");
  require(h.temperature_start >= h.temperature_end && h.temperature_end > 0.0, "temperature",
          "schedule must decrease and stay > 0");
  require(h.priority_exponent > 0.0, "priority_exponent", "must be > 0");
  require(h.importance_exponent > 0.0, "importance_exponent", "must be > 0");
  require(h.priority_offset > 0.0, "priority_offset", "must be > 0");
  require(h.gamma > 0.0 && h.gamma <= 1.0, "gamma", "must be in (0, 1]");
  require(h.reward_scale > 0.0, "reward_scale", "must be > 0");
  require(h.replay_capacity >= h.batch, "replay_capacity", "must hold at least one batch");
  require(h.episodes > 0, "episodes", "must be > 0");
  require(h.decay_steps >= 0, "decay_steps", "must be >= 0");
  require(h.train_every >= 1, "train_every", "must be >= 1");
  require(h.hidden >= 1 && h.hidden_layers >= 1, "hidden", "must be >= 1");
}

nlohmann::json to_json(const TrainHyper& h) {
  return {{"learning_rate", h.learning_rate},
          {"batch", h.batch},
          {"terminal_per_batch", h.terminal_per_batch},
          {"target_sync", h.target_sync},
          {"epsilon_start", h.epsilon_start},
          {"epsilon_end", h.epsilon_end},
          {"temperature_start", h.temperature_start},
          {"temperature_end", h.temperature_end},
          {"priority_exponent", h.priority_exponent},
          {"importance_exponent", h.importance_exponent},
          {"priority_offset", h.priority_offset},
          {"gamma", h.gamma},
          {"reward_scale", h.reward_scale},
          {"replay_capacity", h.replay_capacity},
          {"episodes", h.episodes},
          {"decay_steps", h.decay_steps},
          {"train_every", h.train_every},
          {"hidden", h.hidden},
          {"hidden_layers", h.hidden_layers}};
}

TrainHyper train_hyper_from_json(const nlohmann::json& j) {
  TrainHyper h;
  if (!j.is_object()) throw ValidationError("train config must be an object");
  auto read = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  read("learning_rate", h.learning_rate);
  read("batch", h.batch);
  read("terminal_per_batch", h.terminal_per_batch);
  read("target_sync", h.target_sync);
  read("epsilon_start", h.epsilon_start);
  read("epsilon_end", h.epsilon_end);
  read("temperature_start", h.temperature_start);
  read("temperature_end", h.temperature_end);
  read("priority_exponent", h.priority_exponent);
  read("importance_exponent", h.importance_exponent);
  read("priority_offset", h.priority_offset);
  read("gamma", h.gamma);
  read("reward_scale", h.reward_scale);
  read("replay_capacity", h.replay_capacity);
  read("episodes", h.episodes);
  read("decay_steps", h.decay_steps);
  read("train_every", h.train_every);
  read("hidden", h.hidden);
  read("hidden_layers", h.hidden_layers);
  validate(h);
  return h;
}

double linear_schedule(double start, double end, long long t, long long horizon) {
  if (horizon <= 0 || t >= horizon) return end;
  const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(horizon));
  return start + (end - start) * frac;
}

int greedy_action(const std::array<double, 2>& q) { return q[1] > q[0] ? 1 : 0; }

int select_action(const std::array<double, 2>& q, double epsilon, double temperature,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) {
    // softmax over two actions: P(grant) = 1 / (1 + exp((q_deny - q_grant) / tau))
    const double z = (q[0] - q[1]) / temperature;
    const double p_grant = z > 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    return unit(rng) < p_grant ? 1 : 0;
  }
  return greedy_action(q);
}

int select_action(const QNetwork& net, const std::vector<double>& features, double epsilon,
                  double temperature, std::mt19937_64& rng) {
  return select_action(net.q_values(features), epsilon, temperature, rng);
}

Eigen::VectorXd td_targets(const SampledBatch& batch, const QNetwork& target_net, double gamma) {
  const Eigen::Index n = batch.rewards.size();
  Eigen::VectorXd y = batch.rewards;
  bool any_bootstrap = false;
  for (Eigen::Index b = 0; b < n; ++b) any_bootstrap = any_bootstrap || !batch.done[b];
  if (!any_bootstrap) return y;
  const Eigen::MatrixXd q_next = target_net.forward(batch.next_states);
  for (Eigen::Index b = 0; b < n; ++b) {
    if (!batch.done[b]) y[b] += gamma * q_next.col(b).maxCoeff();
  }
  return y;
}

DqnTrainer::DqnTrainer(const QNetworkShape& shape, const TrainHyper& hyper, std::uint64_t seed)
    : hyper_(hyper),
      net_(shape, mix_seed(seed, 1)),
      target_(net_),
      adam_(net_.parameters(), hyper.learning_rate),
      buffer_(hyper.replay()),
      rng_(mix_seed(seed, 2)) {
  validate(hyper);
}

std::optional<double> DqnTrainer::train_step() {
  if (!buffer_.ready()) return std::nullopt;
  const SampledBatch batch = buffer_.sample(rng_);
  const Eigen::VectorXd y = td_targets(batch, target_, hyper_.gamma);
  Eigen::VectorXd td;
  const double loss = net_.loss_and_gradient(batch.states, batch.actions, y, batch.weights, grads_, &td);
  adam_.step(net_.parameters(), grads_);
  buffer_.update_priorities(batch, td);
  ++train_steps_;
  if (train_steps_ % hyper_.target_sync == 0) target_ = net_;
  return loss;
}

std::string to_string(TrainScope scope) {
  switch (scope) {
    case TrainScope::kGeneral: return "general";
    case TrainScope::kGpuConstrained: return "gpu";
    case TrainScope::kSpecific: return "specific";
  }
  return "unknown";
}

TrainScope parse_scope(const std::string& text) {
  if (text == "general") return TrainScope::kGeneral;
  if (text == "gpu" || text == "gpu-constrained") return TrainScope::kGpuConstrained;
  if (text == "specific") return TrainScope::kSpecific;
  throw ValidationError("scope must be one of general, gpu, specific (got '" + text + "')");
}

ScenarioSampler ScenarioSampler::specific(Scenario scenario, const GeneratorConfig& gen) {
  validate(scenario);
  ScenarioSampler s;
  s.scope_ = TrainScope::kSpecific;
  s.i_max_ = scenario.user_count();
  s.norm_.alpha_scale = alpha_scale(gen, scenario.edge, scenario.pai);
  s.norm_.slot_scale = scenario.edge.slots_per_interval;
  s.pool_.push_back(std::move(scenario));
  return s;
}

ScenarioSampler ScenarioSampler::pooled(TrainScope scope, std::uint64_t master_seed, int pool_size,
                                        int users_min, int users_max,
                                        std::vector<int> gpu_choices, const GeneratorConfig& gen,
                                        const EdgeConfig& edge, const PaiParams& pai) {
  if (pool_size < 1) throw ValidationError("sampler: pool_size must be >= 1");
  if (users_min < 1 || users_max < users_min) {
    throw ValidationError("sampler: user range must satisfy 1 <= min <= max");
  }
  if (gpu_choices.empty()) throw ValidationError("sampler: gpu_choices must be non-empty");
  ScenarioSampler s;
  s.scope_ = scope;
  s.i_max_ = users_max;
  s.norm_.slot_scale = edge.slots_per_interval;
  s.norm_.alpha_scale = 0.0;
  for (int g : gpu_choices) {
    EdgeConfig e = edge;
    e.gpus = g;
    s.norm_.alpha_scale = std::max(s.norm_.alpha_scale, alpha_scale(gen, e, pai));
  }
  s.pool_.reserve(pool_size);
  for (int k = 0; k < pool_size; ++k) {
    const std::uint64_t seed = mix_seed(master_seed, static_cast<std::uint64_t>(k));
    std::mt19937_64 pick(seed);
    GeneratorConfig g = gen;
    g.user_count = std::uniform_int_distribution<int>(users_min, users_max)(pick);
    EdgeConfig e = edge;
    e.gpus = gpu_choices[std::uniform_int_distribution<std::size_t>(0, gpu_choices.size() - 1)(pick)];
    s.pool_.push_back(generate_scenario(seed, g, e, pai));
  }
  return s;
}

const Scenario& ScenarioSampler::operator()(long long episode) const {
  return pool_[static_cast<std::size_t>(episode % static_cast<long long>(pool_.size()))];
}

namespace {

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

TrainResult train(const ScenarioSampler& sampler, const TrainHyper& hyper, std::uint64_t seed,
                  const EpisodeCallback& on_episode) {
  validate(hyper);
  QNetworkShape shape;
  shape.i_max = sampler.i_max();
  shape.hidden = hyper.hidden;
  shape.hidden_layers = hyper.hidden_layers;
  DqnTrainer trainer(shape, hyper, seed);
  std::mt19937_64 explore(mix_seed(seed, 3));

  const long long horizon = hyper.decay_steps > 0
                                ? hyper.decay_steps
                                : static_cast<long long>(hyper.episodes) * sampler(0).user_count();
  const auto& norm = sampler.normalization();
  const int i_max = sampler.i_max();

  TrainResult result;
  result.returns.reserve(hyper.episodes);
  for (int e = 0; e < hyper.episodes; ++e) {
    const Scenario& scenario = sampler(e);
    Episode episode = run_episode(scenario, [&](const EnvState& state) {
      const double eps = linear_schedule(hyper.epsilon_start, hyper.epsilon_end, result.env_steps, horizon);
      const double tau = linear_schedule(hyper.temperature_start, hyper.temperature_end,
                                         result.env_steps, horizon);
      const int action = select_action(trainer.net(), encode(state, i_max, norm), eps, tau, explore);
      ++result.env_steps;
      for (int k = 0; k < hyper.train_every; ++k) trainer.train_step();
      return action;
    });

    const auto rewards = assign_rewards(episode, scenario);
    double ret = 0.0;
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      const auto& tr = episode.steps[t];
      StoredTransition st;
      st.state = to_float(encode(tr.state, i_max, norm));
      st.next = to_float(encode(tr.next, i_max, norm));
      st.action = tr.action;
      st.reward = rewards[t] * hyper.reward_scale;
      st.done = tr.done;
      trainer.buffer().push(std::move(st));
      ret += rewards[t];
    }
    if (episode.steps.empty()) ret = objective(scenario, episode_decision(episode, scenario));
    result.returns.push_back(ret);
    if (on_episode) on_episode(e, ret);
  }

  result.train_steps = trainer.train_steps();
  result.policy.net = trainer.net();
  result.policy.norm = norm;
  result.policy.scope = to_string(sampler.scope());
  result.policy.seed = seed;
  result.policy.episodes = hyper.episodes;
  return result;
}

Decision greedy_solve(const TrainedPolicy& policy, const Scenario& scenario) {
  if (scenario.user_count() > policy.i_max()) {
    throw ValidationError("greedy_solve: scenario has " + std::to_string(scenario.user_count()) +
                          " users but the policy supports at most " +
                          std::to_string(policy.i_max()));
  }
  EnvState state = reset(scenario);
  while (!state.terminal()) {
    const auto q = policy.net.q_values(encode(state, policy.i_max(), policy.norm));
    apply_action(state, greedy_action(q));
  }
  return resolve_splits(scenario, grants_of(state));
}

nlohmann::json to_json(const TrainedPolicy& policy) {
  return {{"format", "edgesplit-policy"},
          {"version", 1},
          {"scope", policy.scope},
          {"seed", policy.seed},
          {"episodes", policy.episodes},
          {"i_max", policy.i_max()},
          {"normalization",
           {{"alpha_scale", policy.norm.alpha_scale}, {"slot_scale", policy.norm.slot_scale}}},
          {"network", policy.net.to_json()}};
}

TrainedPolicy policy_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "edgesplit-policy") {
      throw ValidationError("policy: unknown format tag");
    }
    TrainedPolicy p;
    p.scope = j.at("scope").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.episodes = j.at("episodes").get<int>();
    p.norm.alpha_scale = j.at("normalization").at("alpha_scale").get<double>();
    p.norm.slot_scale = j.at("normalization").at("slot_scale").get<double>();
    p.net = QNetwork::from_json(j.at("network"));
    if (j.at("i_max").get<int>() != p.i_max()) {
      throw ValidationError("policy: i_max disagrees with network shape");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("policy: ") + e.what());
  }
}

void save_policy(const TrainedPolicy& policy, const std::filesystem::path& path) {
  write_json_file(to_json(policy), path);
}

TrainedPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_json_file(path));
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  std::vector<double> out(values.size());
  if (window == 0) window = 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= window) acc -= values[i - window];
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

}  // namespace edgesplit
