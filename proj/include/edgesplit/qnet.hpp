#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace edgesplit {

struct QNetworkShape {
  int i_max = 20;
  int hidden = 256;
  int hidden_layers = 3;
  int vocabulary = 4;
  int embedding_dim = 3;

  bool operator==(const QNetworkShape&) const = default;
};

// Q(s, .) for the two actions (deny, grant).
//
// Each user block of the encoded state contributes its three statics followed
// by the embedding of its status token; the blocks are flattened, the globals
// appended, and the result passes through `hidden_layers` ReLU layers and a
// linear 2-unit head.
//
// Parameters are stored in a fixed order: embedding (embedding_dim x
// vocabulary), then (W, b) per dense layer, W being (out x in) and b (out x 1).
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(const QNetworkShape& shape, std::uint64_t seed);

  const QNetworkShape& shape() const { return shape_; }
  int feature_length() const;
  int dense_input() const;

  std::vector<Eigen::MatrixXd>& parameters() { return params_; }
  const std::vector<Eigen::MatrixXd>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  // Features are one column per sample, rows laid out as offload_env::encode.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& features) const;
  std::array<double, 2> q_values(const std::vector<double>& features) const;

  // Weighted squared TD loss (1/B) sum_b w_b (y_b - Q(s_b, a_b))^2 and its
  // gradient with respect to every parameter. Returns the per-sample TD errors
  // y_b - Q(s_b, a_b) through `td_errors` when non-null.
  double loss_and_gradient(const Eigen::MatrixXd& features, const std::vector<int>& actions,
                           const Eigen::VectorXd& targets, const Eigen::VectorXd& weights,
                           std::vector<Eigen::MatrixXd>& gradients,
                           Eigen::VectorXd* td_errors = nullptr) const;

  double loss(const Eigen::MatrixXd& features, const std::vector<int>& actions,
              const Eigen::VectorXd& targets, const Eigen::VectorXd& weights) const;

  nlohmann::json to_json() const;
  static QNetwork from_json(const nlohmann::json& j);

  bool operator==(const QNetwork& other) const;

 private:
  struct Activations {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;   // pre-activations of hidden layers
    std::vector<Eigen::MatrixXd> post;  // ReLU outputs
    Eigen::MatrixXd q;
    std::vector<std::vector<int>> tokens;  // per sample, per user slot
  };

  void assemble_input(const Eigen::MatrixXd& features, Activations& act) const;
  void run_forward(const Eigen::MatrixXd& features, Activations& act) const;

  QNetworkShape shape_;
  std::vector<Eigen::MatrixXd> params_;
};

// Adaptive-moment optimizer over a parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Eigen::MatrixXd>& params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads);
  long long steps() const { return t_; }

 private:
  double lr_ = 1e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long long t_ = 0;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
};

}  // namespace edgesplit
