#include <doctest.h>

#include <algorithm>

#include "edgesplit/errors.hpp"
#include "edgesplit/offload_env.hpp"
#include "edgesplit/split_solver.hpp"
#include "support.hpp"

using namespace edgesplit;

namespace {

int count_status(const EnvState& s, UserStatus st) {
  return static_cast<int>(std::count_if(s.locals.begin(), s.locals.end(),
                                        [&](const LocalSubState& l) { return l.status == st; }));
}

void check_counters(const EnvState& s) {
  const int pending = count_status(s, UserStatus::kPending);
  const int granted = count_status(s, UserStatus::kGranted);
  const int denied = count_status(s, UserStatus::kDenied);
  CHECK(s.global.pending == pending);
  CHECK(s.global.granted == granted);
  CHECK(s.global.denied == denied);
  CHECK(pending + granted + denied + (s.terminal() ? 0 : 1) == s.user_count());
  CHECK(granted <= s.global.b_max);
  if (!s.terminal()) {
    CHECK(count_status(s, UserStatus::kInProgress) == 1);
    CHECK(s.locals[s.cursor].status == UserStatus::kInProgress);
  }
}

}  // namespace

TEST_CASE("reset builds the first state") {
  const auto s = testsupport::random_scenario(1, 3);
  const auto st = reset(s);
  CHECK(count_status(st, UserStatus::kInProgress) == 1);
  CHECK(count_status(st, UserStatus::kPending) == 2);
  CHECK(st.global.pending == 2);
  CHECK(st.cursor == 0);
  CHECK(st == reset(s));
  int min_slot = 1000;
  for (const auto& u : s.users) min_slot = std::min(min_slot, u.request_slot);
  CHECK(st.locals[0].request_slot == min_slot);
  for (std::size_t k = 1; k < st.locals.size(); ++k) {
    const auto& a = st.locals[k - 1];
    const auto& b = st.locals[k];
    CHECK((a.request_slot < b.request_slot || (a.request_slot == b.request_slot && a.user < b.user)));
  }
  Scenario empty = s;
  empty.users.clear();
  CHECK_THROWS(reset(empty));
}

TEST_CASE("grant at the cap ends the episode and denies the rest") {
  const auto s = testsupport::random_scenario(2, 3, 8, 1);
  const auto st = reset(s);
  const auto r = step(st, 1);
  CHECK(r.done);
  CHECK(r.state.terminal());
  CHECK(r.state.global.granted == 1);
  CHECK(r.state.global.denied == 2);
  check_counters(r.state);
  CHECK_THROWS_AS(step(r.state, 0), ContractError);
}

TEST_CASE("denying everyone takes exactly I steps") {
  const auto s = testsupport::random_scenario(3, 7);
  auto st = reset(s);
  int steps = 0;
  bool done = false;
  while (!done) {
    done = apply_action(st, 0);
    ++steps;
    check_counters(st);
  }
  CHECK(steps == 7);
  CHECK(st.global.denied == 7);
}

TEST_CASE("zero cap is terminal at reset") {
  const auto s = testsupport::random_scenario(3, 4, 8, 0);
  const auto st = reset(s);
  CHECK(st.terminal());
  CHECK(st.global.denied == 4);
}

TEST_CASE("step is pure and rejects bad actions") {
  const auto s = testsupport::random_scenario(4, 5);
  const auto st = reset(s);
  const auto a = step(st, 1);
  const auto b = step(st, 1);
  CHECK(a.state == b.state);
  CHECK(st == reset(s));
  CHECK_THROWS_AS(step(st, 2), ContractError);
}

TEST_CASE("counters hold along random episodes") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto s = testsupport::random_scenario(t, 1 + t % 15, 8, t % 6);
    auto st = reset(s);
    check_counters(st);
    int steps = 0;
    while (!st.terminal()) {
      apply_action(st, static_cast<int>(rng() & 1u));
      check_counters(st);
      ++steps;
    }
    CHECK(steps <= s.user_count());
  }
}

TEST_CASE("encode layout and cyclic shift") {
  const auto s = testsupport::random_scenario(5, 4);
  const Normalization norm{10.0, 100.0};
  auto st = reset(s);
  apply_action(st, 0);
  const auto f = encode(st, 6, norm);
  CHECK(f.size() == static_cast<std::size_t>(feature_length(6)));
  CHECK(f.size() == 6 * 4 + 6);
  // In-progress user first.
  CHECK(f[3] == static_cast<double>(UserStatus::kInProgress));
  const auto& cur = st.locals[st.cursor];
  CHECK(f[0] == cur.alpha / 10.0);
  CHECK(f[1] == cur.step_latency);
  CHECK(f[2] == cur.request_slot / 100.0);
  // Wrapped user: the one processed before sits last among real users.
  CHECK(f[3 * 4 + 3] == static_cast<double>(UserStatus::kDenied));
  CHECK(f[3 * 4 + 0] == st.locals[0].alpha / 10.0);
  // Padding.
  for (int k = 4; k < 6; ++k) {
    CHECK(f[k * 4 + 0] == 0.0);
    CHECK(f[k * 4 + 1] == 0.0);
    CHECK(f[k * 4 + 2] == 0.0);
    CHECK(f[k * 4 + 3] == 3.0);
  }
  const double* g = f.data() + 24;
  CHECK(g[0] == s.edge.b_max / 6.0);
  CHECK(g[1] == s.edge.device.step_slope / s.edge.gpus);
  CHECK(g[2] == s.edge.device.step_intercept);
  CHECK(g[3] == 2 / 6.0);
  CHECK(g[4] == 0.0);
  CHECK(g[5] == 1 / 6.0);
  CHECK_THROWS_AS(encode(st, 3, norm), ValidationError);
}

TEST_CASE("rotating the user order does not change the encoding") {
  const auto s = testsupport::random_scenario(6, 5);
  auto st = reset(s);
  apply_action(st, 1);
  apply_action(st, 0);
  EnvState rotated = st;
  const int n = st.user_count();
  for (int k = 0; k < n; ++k) rotated.locals[k] = st.locals[(k + 2) % n];
  rotated.cursor = (st.cursor - 2 + n) % n;
  const Normalization norm{7.0, 100.0};
  CHECK(encode(st, 8, norm) == encode(rotated, 8, norm));
}

TEST_CASE("all-deny episode rewards") {
  const auto s = testsupport::random_scenario(7, 6);
  const auto ep = run_episode(s, [](const EnvState&) { return 0; });
  const auto r = assign_rewards(ep, s);
  REQUIRE(r.size() == 6);
  for (int t = 0; t < 5; ++t) {
    const auto& u = s.users[ep.steps[t].user];
    CHECK(r[t] == doctest::Approx(u.alpha * fitted_pai(200, s.pai)).epsilon(1e-14));
  }
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  CHECK(total == doctest::Approx(objective(s, episode_decision(ep, s))).epsilon(1e-12));
}

TEST_CASE("single-user episode reward is the whole objective") {
  const auto s = testsupport::random_scenario(8, 1);
  for (int a : {0, 1}) {
    const auto ep = run_episode(s, [a](const EnvState&) { return a; });
    const auto r = assign_rewards(ep, s);
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(objective(s, episode_decision(ep, s))).epsilon(1e-13));
  }
}

TEST_CASE("reward sum equals the objective for random action sequences") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    const auto s = testsupport::random_scenario(100 + t, 1 + t % 20, 1 + t % 16, 1 + t % 12);
    const auto ep = run_episode(s, [&](const EnvState&) { return static_cast<int>(rng() % 2); });
    const auto r = assign_rewards(ep, s);
    CHECK(r.size() == ep.steps.size());
    const Decision d = episode_decision(ep, s);
    CHECK_NOTHROW(check_feasible(s, d));
    const double total = std::accumulate(r.begin(), r.end(), 0.0);
    CHECK(testsupport::rel_diff(total, objective(s, d)) < 1e-9);
  }
}

TEST_CASE("zero cap gives an empty episode with the all-deny decision") {
  const auto s = testsupport::random_scenario(10, 5, 8, 0);
  const auto ep = run_episode(s, [](const EnvState&) { return 1; });
  CHECK(ep.steps.empty());
  CHECK(ep.complete());
  CHECK(assign_rewards(ep, s).empty());
  CHECK(episode_decision(ep, s) == all_deny_decision(s));
}

TEST_CASE("incomplete episodes are rejected") {
  const auto s = testsupport::random_scenario(9, 4);
  Episode ep;
  ep.final_state = reset(s);
  CHECK_THROWS_AS(assign_rewards(ep, s), ContractError);
}
