#include <doctest.h>

#include "edgesplit/errors.hpp"
#include "edgesplit/offload_env.hpp"
#include "edgesplit/qnet.hpp"
#include "support.hpp"

using namespace edgesplit;

namespace {

// Random features with valid status tokens in every user block.
Eigen::MatrixXd random_features(const QNetworkShape& shape, int batch, std::mt19937_64& rng) {
  const int len = feature_length(shape.i_max);
  Eigen::MatrixXd f(len, batch);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_int_distribution<int> tok(0, 3);
  for (int b = 0; b < batch; ++b) {
    for (int r = 0; r < len; ++r) f(r, b) = val(rng);
    for (int u = 0; u < shape.i_max; ++u) f(u * kLocalFeatures + 3, b) = tok(rng);
  }
  return f;
}

bool grad_close(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-7) return std::abs(analytic - numeric) < 1e-9;
  return std::abs(analytic - numeric) / scale < 1e-4;
}

}  // namespace

TEST_CASE("shape bookkeeping") {
  QNetworkShape shape{5, 16, 2, 4, 3};
  QNetwork net(shape, 1);
  CHECK(net.feature_length() == 5 * 4 + 6);
  CHECK(net.dense_input() == 5 * 6 + 6);
  const auto& p = net.parameters();
  REQUIRE(p.size() == 1 + 2 * 3);
  CHECK(p[0].rows() == 3);
  CHECK(p[0].cols() == 4);
  CHECK(p[1].rows() == 16);
  CHECK(p[1].cols() == 36);
  CHECK(p[5].rows() == 2);
  CHECK(p[6].rows() == 2);
  CHECK(net.parameter_count() == 12 + 16 * 36 + 16 + 16 * 16 + 16 + 2 * 16 + 2);
}

TEST_CASE("zero weights give zero Q") {
  QNetworkShape shape{3, 8, 2, 4, 3};
  QNetwork net(shape, 2);
  for (auto& p : net.parameters()) p.setZero();
  std::mt19937_64 rng(1);
  const auto q = net.forward(random_features(shape, 4, rng));
  CHECK(q.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("output layer is linear") {
  QNetworkShape shape{3, 8, 2, 4, 3};
  QNetwork net(shape, 3);
  std::mt19937_64 rng(2);
  const auto f = random_features(shape, 5, rng);
  const auto q = net.forward(f);
  auto& p = net.parameters();
  p[p.size() - 2] *= 2.0;
  p[p.size() - 1] *= 2.0;
  const auto q2 = net.forward(f);
  CHECK((q2 - 2.0 * q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layout mismatch and bad tokens are rejected") {
  QNetworkShape shape{3, 8, 1, 4, 3};
  QNetwork net(shape, 4);
  CHECK_THROWS_AS(net.forward(Eigen::MatrixXd::Zero(5, 1)), ValidationError);
  std::mt19937_64 rng(3);
  auto f = random_features(shape, 1, rng);
  f(3, 0) = 4.0;
  CHECK_THROWS_AS(net.forward(f), ValidationError);
  f(3, 0) = 1.5;
  CHECK_THROWS_AS(net.forward(f), ValidationError);
}

TEST_CASE("single-sample and batched forward agree") {
  QNetworkShape shape{4, 12, 3, 4, 3};
  QNetwork net(shape, 5);
  std::mt19937_64 rng(4);
  const auto f = random_features(shape, 6, rng);
  const auto q = net.forward(f);
  for (int b = 0; b < 6; ++b) {
    std::vector<double> col(f.col(b).data(), f.col(b).data() + f.rows());
    const auto qb = net.q_values(col);
    CHECK(qb[0] == doctest::Approx(q(0, b)).epsilon(1e-12));
    CHECK(qb[1] == doctest::Approx(q(1, b)).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    QNetworkShape shape{2 + trial % 3, 5 + trial, 1 + trial % 3, 4, 3};
    QNetwork net(shape, 100 + trial);
    const int batch = 3 + trial;
    const auto f = random_features(shape, batch, rng);
    std::vector<int> actions(batch);
    Eigen::VectorXd y(batch), w(batch);
    std::uniform_real_distribution<double> val(-2.0, 2.0), wd(0.1, 1.0);
    for (int b = 0; b < batch; ++b) {
      actions[b] = static_cast<int>(rng() % 2);
      y[b] = val(rng);
      w[b] = wd(rng);
    }
    std::vector<Eigen::MatrixXd> grads;
    const double loss = net.loss_and_gradient(f, actions, y, w, grads);
    CHECK(loss == doctest::Approx(net.loss(f, actions, y, w)).epsilon(1e-14));
    CHECK(loss >= 0.0);
    const double h = 1e-6;
    for (std::size_t k = 0; k < net.parameters().size(); ++k) {
      auto& p = net.parameters()[k];
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double orig = p.data()[i];
        p.data()[i] = orig + h;
        const double up = net.loss(f, actions, y, w);
        p.data()[i] = orig - h;
        const double down = net.loss(f, actions, y, w);
        p.data()[i] = orig;
        const double numeric = (up - down) / (2 * h);
        CHECK_MESSAGE(grad_close(grads[k].data()[i], numeric),
                      "param " << k << "[" << i << "] analytic " << grads[k].data()[i]
                               << " numeric " << numeric);
      }
    }
  }
}

TEST_CASE("td errors are reported per sample") {
  QNetworkShape shape{2, 6, 1, 4, 3};
  QNetwork net(shape, 9);
  std::mt19937_64 rng(5);
  const auto f = random_features(shape, 4, rng);
  const std::vector<int> actions{0, 1, 1, 0};
  Eigen::VectorXd y(4);
  y << 0.5, -0.2, 1.0, 0.0;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  std::vector<Eigen::MatrixXd> grads;
  Eigen::VectorXd td;
  net.loss_and_gradient(f, actions, y, w, grads, &td);
  const auto q = net.forward(f);
  for (int b = 0; b < 4; ++b) CHECK(td[b] == doctest::Approx(y[b] - q(actions[b], b)).epsilon(1e-12));
}

TEST_CASE("adam takes a bias-corrected first step of size lr") {
  std::vector<Eigen::MatrixXd> params{Eigen::MatrixXd::Constant(2, 2, 1.0)};
  std::vector<Eigen::MatrixXd> grads{Eigen::MatrixXd::Constant(2, 2, 0.3)};
  Adam adam(params, 0.01);
  adam.step(params, grads);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  CHECK(params[0](0, 0) == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
  CHECK(adam.steps() == 1);
}

TEST_CASE("adam reduces the loss on a fixed batch") {
  QNetworkShape shape{3, 16, 2, 4, 3};
  QNetwork net(shape, 11);
  std::mt19937_64 rng(6);
  const auto f = random_features(shape, 16, rng);
  std::vector<int> actions(16);
  Eigen::VectorXd y(16);
  for (int b = 0; b < 16; ++b) {
    actions[b] = b % 2;
    y[b] = 0.1 * b - 0.5;
  }
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(16);
  Adam adam(net.parameters(), 1e-2);
  std::vector<Eigen::MatrixXd> grads;
  const double first = net.loss(f, actions, y, w);
  for (int t = 0; t < 300; ++t) {
    net.loss_and_gradient(f, actions, y, w, grads);
    adam.step(net.parameters(), grads);
  }
  CHECK(net.loss(f, actions, y, w) < 0.1 * first);
}

TEST_CASE("network JSON round-trip") {
  QNetworkShape shape{3, 7, 2, 4, 3};
  QNetwork net(shape, 12);
  const auto back = QNetwork::from_json(net.to_json());
  CHECK(back == net);
  auto j = net.to_json();
  j["shape"]["hidden"] = 8;
  CHECK_THROWS_AS(QNetwork::from_json(j), ValidationError);
}

TEST_CASE("initialization is seeded") {
  QNetworkShape shape{3, 7, 2, 4, 3};
  CHECK(QNetwork(shape, 1) == QNetwork(shape, 1));
  CHECK_FALSE(QNetwork(shape, 1) == QNetwork(shape, 2));
}
