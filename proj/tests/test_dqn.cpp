#include <doctest.h>

#include <chrono>

#include "edgesplit/baselines.hpp"
#include "edgesplit/dqn.hpp"
#include "edgesplit/errors.hpp"
#include "support.hpp"

using namespace edgesplit;

namespace {

// Small, fast configuration for exercising the training machinery.
TrainHyper tiny_hyper(int episodes) {
  TrainHyper h;
  h.episodes = episodes;
  h.batch = 16;
  h.terminal_per_batch = 2;
  h.replay_capacity = 2000;
  h.target_sync = 50;
  h.hidden = 16;
  h.hidden_layers = 2;
  h.learning_rate = 1e-3;
  return h;
}

TrainedPolicy random_policy(int i_max, std::uint64_t seed) {
  TrainedPolicy p;
  p.net = QNetwork(QNetworkShape{i_max, 16, 2, 4, 3}, seed);
  p.norm = {50.0, 100.0};
  p.scope = "specific";
  return p;
}

}  // namespace

TEST_CASE("linear schedule endpoints") {
  CHECK(linear_schedule(0.5, 0.001, 0, 100) == 0.5);
  CHECK(linear_schedule(0.5, 0.001, 100, 100) == 0.001);
  CHECK(linear_schedule(0.5, 0.001, 500, 100) == 0.001);
  CHECK(linear_schedule(5.0, 0.01, 50, 100) == doctest::Approx(2.505));
}

TEST_CASE("greedy action breaks ties toward deny") {
  CHECK(greedy_action({1.0, 1.0}) == 0);
  CHECK(greedy_action({1.0, 1.5}) == 1);
  CHECK(greedy_action({2.0, 1.5}) == 0);
}

TEST_CASE("exploration mix") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    CHECK(select_action({0.3, 0.7}, 0.0, 5.0, rng) == 1);
    CHECK(select_action({0.7, 0.3}, 0.0, 5.0, rng) == 0);
  }
  int grant = 0;
  for (int t = 0; t < 1000; ++t) grant += select_action({0.0, 0.1}, 1.0, 1e-4, rng);
  CHECK(grant == 1000);

  const int draws = 10000;
  grant = 0;
  for (int t = 0; t < draws; ++t) grant += select_action({0.4, 0.4}, 1.0, 5.0, rng);
  const double freq = static_cast<double>(grant) / draws;
  CHECK(freq > 0.48);
  CHECK(freq < 0.52);
}

TEST_CASE("softmax branch matches its probability") {
  std::mt19937_64 rng(2);
  const double tau = 0.5;
  const std::array<double, 2> q{0.0, 0.4};
  const double p = 1.0 / (1.0 + std::exp((q[0] - q[1]) / tau));
  int grant = 0;
  for (int t = 0; t < 20000; ++t) grant += select_action(q, 1.0, tau, rng);
  CHECK(static_cast<double>(grant) / 20000 == doctest::Approx(p).epsilon(0.02));
}

TEST_CASE("td targets") {
  SampledBatch batch;
  batch.rewards = Eigen::VectorXd(3);
  batch.rewards << 1.0, 0.0, -2.0;
  batch.done = {true, false, false};
  batch.next_states = Eigen::MatrixXd::Zero(feature_length(2), 3);
  for (int b = 0; b < 3; ++b) {
    for (int u = 0; u < 2; ++u) batch.next_states(u * 4 + 3, b) = 0;
    batch.next_states(0, b) = 0.1 * b;
  }
  QNetwork target(QNetworkShape{2, 8, 1, 4, 3}, 5);
  const auto q_next = target.forward(batch.next_states);
  const auto y = td_targets(batch, target, 1.0);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == doctest::Approx(q_next.col(1).maxCoeff()).epsilon(1e-14));
  CHECK(y[2] == doctest::Approx(-2.0 + q_next.col(2).maxCoeff()).epsilon(1e-14));
  for (auto& p : target.parameters()) p.setZero();
  const auto y0 = td_targets(batch, target, 1.0);
  for (int b = 0; b < 3; ++b) CHECK(y0[b] == batch.rewards[b]);
}

TEST_CASE("trainer skips until ready and syncs the target periodically") {
  auto h = tiny_hyper(1);
  h.target_sync = 5;
  const QNetworkShape shape{3, 8, 1, 4, 3};
  DqnTrainer trainer(shape, h, 1);
  CHECK_FALSE(trainer.train_step().has_value());
  std::mt19937_64 rng(3);
  for (int k = 0; k < 40; ++k) {
    StoredTransition t;
    t.state.assign(feature_length(3), 0.0f);
    t.state[0] = static_cast<float>(k % 7) / 7.0f;
    t.next = t.state;
    t.action = k % 2;
    t.reward = 0.1 * (k % 5);
    t.done = k % 4 == 0;
    trainer.buffer().push(t);
  }
  for (int s = 1; s <= 12; ++s) {
    const auto loss = trainer.train_step();
    REQUIRE(loss.has_value());
    CHECK(*loss >= 0.0);
    if (s % 5 == 0) {
      CHECK(trainer.target_net() == trainer.net());
    } else {
      CHECK_FALSE(trainer.target_net() == trainer.net());
    }
  }
}

TEST_CASE("hyperparameter validation") {
  TrainHyper h;
  CHECK_NOTHROW(validate(h));
  h.episodes = 0;
  CHECK_THROWS_AS(validate(h), ValidationError);
  h = TrainHyper{};
  h.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(h), ValidationError);
  h = TrainHyper{};
  h.epsilon_end = 0.9;
  CHECK_THROWS_AS(validate(h), ValidationError);
  h = TrainHyper{};
  CHECK(to_json(train_hyper_from_json(to_json(h))) == to_json(h));
}

TEST_CASE("training is reproducible for a fixed seed") {
  const auto s = testsupport::random_scenario(3, 6);
  const auto sampler = ScenarioSampler::specific(s, default_generator_config());
  const auto h = tiny_hyper(30);
  const auto a = train(sampler, h, 42);
  const auto b = train(sampler, h, 42);
  CHECK(a.returns == b.returns);
  CHECK(a.policy.net == b.policy.net);
  CHECK(a.env_steps == b.env_steps);
  CHECK(a.train_steps > 0);
  const auto c = train(sampler, h, 43);
  CHECK_FALSE(c.policy.net == a.policy.net);
  // Returns are the objectives of the episodes' final decisions.
  CHECK(a.returns.size() == 30);
  const double oracle = objective(s, solve_count_oracle(s));
  for (double r : a.returns) CHECK(r <= oracle + 1e-9);
}

TEST_CASE("pooled sampler draws user counts and gpus from the ranges") {
  const auto sampler = ScenarioSampler::pooled(TrainScope::kGeneral, 9, 50, 3, 7, {2, 16},
                                               default_generator_config(), default_edge_config(),
                                               PaiParams{});
  CHECK(sampler.i_max() == 7);
  CHECK(sampler.pool_size() == 50);
  bool saw_two = false, saw_sixteen = false;
  for (int k = 0; k < 50; ++k) {
    const auto& s = sampler(k);
    CHECK(s.user_count() >= 3);
    CHECK(s.user_count() <= 7);
    saw_two |= s.edge.gpus == 2;
    saw_sixteen |= s.edge.gpus == 16;
    CHECK(&sampler(k + 50) == &s);
  }
  CHECK(saw_two);
  CHECK(saw_sixteen);
  CHECK_THROWS_AS(ScenarioSampler::pooled(TrainScope::kGeneral, 1, 0, 3, 7, {2},
                                          default_generator_config(), default_edge_config(),
                                          PaiParams{}),
                  ValidationError);
}

TEST_CASE("greedy decisions are always feasible") {
  const auto policy = random_policy(25, 7);
  for (int t = 0; t < 300; ++t) {
    const auto s = testsupport::random_scenario(1000 + t, 1 + t % 25, 1 + t % 16, t % 12);
    const auto d = greedy_solve(policy, s);
    CHECK_NOTHROW(check_feasible(s, d));
    CHECK(greedy_solve(policy, s) == d);
  }
  CHECK_THROWS_AS(greedy_solve(policy, testsupport::random_scenario(1, 26)), ValidationError);
}

TEST_CASE("policy file round-trip keeps decisions") {
  const auto s = testsupport::random_scenario(3, 10);
  auto policy = random_policy(10, 8);
  policy.seed = 77;
  policy.episodes = 5;
  const auto path = std::filesystem::temp_directory_path() / "edgesplit_unit" / "policy.json";
  save_policy(policy, path);
  const auto back = load_policy(path);
  CHECK(back.net == policy.net);
  CHECK(back.seed == 77);
  CHECK(back.scope == "specific");
  CHECK(back.norm.alpha_scale == policy.norm.alpha_scale);
  CHECK(greedy_solve(back, s) == greedy_solve(policy, s));
  auto j = to_json(policy);
  j["format"] = "other";
  CHECK_THROWS_AS(policy_from_json(j), ValidationError);
}

TEST_CASE("scope names") {
  CHECK(parse_scope("general") == TrainScope::kGeneral);
  CHECK(parse_scope("gpu") == TrainScope::kGpuConstrained);
  CHECK(parse_scope("specific") == TrainScope::kSpecific);
  CHECK_THROWS_AS(parse_scope("global"), ValidationError);
  CHECK(to_string(TrainScope::kGpuConstrained) == "gpu");
}

TEST_CASE("moving average") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto m = moving_average(v, 2);
  REQUIRE(m.size() == 5);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 1.5);
  CHECK(m[4] == 4.5);
}
