#include <doctest.h>

#include "edgesplit/errors.hpp"
#include "edgesplit/gqap.hpp"
#include "edgesplit/qoe.hpp"
#include "support.hpp"

using namespace edgesplit;

namespace {

std::vector<bool> pattern(int users, std::uint32_t mask) {
  std::vector<bool> g(users);
  for (int i = 0; i < users; ++i) g[i] = mask >> i & 1u;
  return g;
}

}  // namespace

TEST_CASE("single user couples only with itself") {
  const auto s = testsupport::random_scenario(1, 1);
  const auto qf = build_quadratic(s, 80);
  int nonzero = 0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) nonzero += qf.quadratic(r, c) != 0.0;
  }
  CHECK(nonzero == 1);
  CHECK(qf.quadratic(0, 0) > 0.0);
}

TEST_CASE("deny indices never couple before absorption") {
  const auto s = testsupport::random_scenario(2, 6);
  const auto qf = build_quadratic(s, 80);
  for (int r = 0; r < qf.size(); ++r) {
    for (int c = 0; c < qf.size(); ++c) {
      if (r % 2 == kDeny || c % 2 == kDeny) CHECK(qf.quadratic(r, c) == 0.0);
    }
  }
}

TEST_CASE("grant couplings follow the transfer and batching terms") {
  const auto s = testsupport::random_scenario(3, 3);
  const auto qf = build_quadratic(s, 80);
  for (int i = 0; i < 3; ++i) {
    const auto& u = s.users[i];
    const double expect = (u.prompt_bits + u.intermediate_bits) / 1e7 + 120 * 0.004 / 8;
    for (int ip = 0; ip < 3; ++ip) {
      CHECK(qf.quadratic(QuadraticForm::index(ip, kGrant), QuadraticForm::index(i, kGrant)) ==
            doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("all-deny value is the sum of deny coefficients") {
  const auto s = testsupport::random_scenario(4, 7);
  const auto qf = build_quadratic(s, 80);
  double sum = 0.0, closed = 0.0;
  for (int i = 0; i < 7; ++i) {
    sum += qf.linear(QuadraticForm::index(i, kDeny));
    const auto& u = s.users[i];
    closed += u.alpha * fitted_pai(200, s.pai) - 200 * step_latency_local(u.device) -
              (100 - u.request_slot) * 0.01;
  }
  const std::vector<bool> none(7, false);
  CHECK(eval_quadratic(qf, none) == doctest::Approx(sum).epsilon(1e-14));
  CHECK(eval_quadratic(qf, none) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("absorption preserves every feasible pattern of a 3-user instance") {
  const auto s = testsupport::random_scenario(5, 3);
  const auto qf = build_quadratic(s, 80);
  const auto ab = absorb_linear(qf);
  CHECK(ab.absorbed());
  for (std::uint32_t mask = 0; mask < 8; ++mask) {
    const auto g = pattern(3, mask);
    CHECK(eval_quadratic(ab, g) == doctest::Approx(eval_quadratic(qf, g)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(absorb_linear(ab), ContractError);
}

TEST_CASE("absorbing a purely linear form puts it on the diagonal") {
  QuadraticForm qf(2);
  for (int k = 0; k < 4; ++k) qf.linear(k) = 1.5 * (k + 1);
  const auto ab = absorb_linear(qf);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(ab.quadratic(r, c) == (r == c ? 1.5 * (r + 1) : 0.0));
  }
}

TEST_CASE("quadratic form reproduces the objective at the fixed split") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = testsupport::random_scenario(seed, 6, 4, 6);
    for (int split : {80, 133, 200}) {
      const auto qf = build_quadratic(s, split);
      const auto ab = absorb_linear(qf);
      for (std::uint32_t mask = 0; mask < 64; ++mask) {
        const auto g = pattern(6, mask);
        Decision d;
        for (bool x : g) d.entries.push_back({x, x ? split : 200});
        const double direct = objective(s, d);
        CHECK(testsupport::rel_diff(eval_quadratic(qf, g), direct) < 1e-12);
        CHECK(testsupport::rel_diff(eval_quadratic(ab, g), direct) < 1e-12);
      }
    }
  }
}

TEST_CASE("out-of-range fixed split is a contract error") {
  const auto s = testsupport::random_scenario(6, 2);
  CHECK_THROWS_AS(build_quadratic(s, 79), ContractError);
  CHECK_THROWS_AS(build_quadratic(s, 201), ContractError);
  CHECK_THROWS_AS(eval_quadratic(build_quadratic(s, 80), {true}), ContractError);
}

TEST_CASE("sparse export lists every nonzero coupling") {
  const auto s = testsupport::random_scenario(7, 4);
  const auto qf = build_quadratic(s, 80);
  const auto j = to_json(qf);
  CHECK(j["users"] == 4);
  CHECK(j["linear"].size() == 8);
  CHECK(j["quadratic"].size() == 16);
  CHECK(j["absorbed"] == false);
}
