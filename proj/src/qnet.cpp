#include "edgesplit/qnet.hpp"

#include <cmath>

#include "edgesplit/errors.hpp"

namespace edgesplit {

namespace {

constexpr int kStatics = 3;
constexpr int kBlock = 4;    // statics + token in the encoded features
constexpr int kGlobals = 6;

}  // namespace

QNetwork::QNetwork(const QNetworkShape& shape, std::uint64_t seed) : shape_(shape) {
  if (shape.i_max < 1 || shape.hidden < 1 || shape.hidden_layers < 1 || shape.vocabulary < 1 ||
      shape.embedding_dim < 1) {
    throw ValidationError("QNetwork: every shape dimension must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Eigen::MatrixXd embedding(shape.embedding_dim, shape.vocabulary);
  for (Eigen::Index k = 0; k < embedding.size(); ++k) embedding.data()[k] = unit(rng);
  params_.push_back(std::move(embedding));

  int in = dense_input();
  for (int layer = 0; layer <= shape.hidden_layers; ++layer) {
    const int out = layer == shape.hidden_layers ? 2 : shape.hidden;
    const double bound = std::sqrt(6.0 / in);
    Eigen::MatrixXd w(out, in);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = bound * unit(rng);
    params_.push_back(std::move(w));
    params_.push_back(Eigen::MatrixXd::Zero(out, 1));
    in = out;
  }
}

int QNetwork::feature_length() const { return shape_.i_max * kBlock + kGlobals; }

int QNetwork::dense_input() const {
  return shape_.i_max * (kStatics + shape_.embedding_dim) + kGlobals;
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

void QNetwork::assemble_input(const Eigen::MatrixXd& features, Activations& act) const {
  if (features.rows() != feature_length()) {
    throw ValidationError("QNetwork: feature length " + std::to_string(features.rows()) +
                          " does not match network layout " + std::to_string(feature_length()));
  }
  const Eigen::MatrixXd& embedding = params_[0];
  const int dim = shape_.embedding_dim;
  const int block = kStatics + dim;
  const Eigen::Index batch = features.cols();
  act.input.resize(dense_input(), batch);
  act.tokens.assign(static_cast<std::size_t>(batch), std::vector<int>(shape_.i_max));
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int p = 0; p < shape_.i_max; ++p) {
      const double raw = features(p * kBlock + kStatics, b);
      const int token = static_cast<int>(std::lround(raw));
      if (token < 0 || token >= shape_.vocabulary || std::abs(raw - token) > 1e-9) {
        throw ValidationError("QNetwork: invalid status token in features");
      }
      act.tokens[b][p] = token;
      for (int k = 0; k < kStatics; ++k) act.input(p * block + k, b) = features(p * kBlock + k, b);
      for (int k = 0; k < dim; ++k) act.input(p * block + kStatics + k, b) = embedding(k, token);
    }
    for (int g = 0; g < kGlobals; ++g) {
      act.input(shape_.i_max * block + g, b) = features(shape_.i_max * kBlock + g, b);
    }
  }
}

void QNetwork::run_forward(const Eigen::MatrixXd& features, Activations& act) const {
  assemble_input(features, act);
  act.pre.clear();
  act.post.clear();
  const Eigen::MatrixXd* h = &act.input;
  for (int layer = 0; layer < shape_.hidden_layers; ++layer) {
    const auto& w = params_[1 + 2 * layer];
    const auto& bias = params_[2 + 2 * layer];
    Eigen::MatrixXd z = w * (*h);
    z.colwise() += bias.col(0);
    act.post.push_back(z.cwiseMax(0.0));
    act.pre.push_back(std::move(z));
    h = &act.post.back();
  }
  const auto& w_out = params_[1 + 2 * shape_.hidden_layers];
  const auto& b_out = params_[2 + 2 * shape_.hidden_layers];
  act.q = w_out * (*h);
  act.q.colwise() += b_out.col(0);
}

Eigen::MatrixXd QNetwork::forward(const Eigen::MatrixXd& features) const {
  Activations act;
  run_forward(features, act);
  return act.q;
}

std::array<double, 2> QNetwork::q_values(const std::vector<double>& features) const {
  const Eigen::Map<const Eigen::MatrixXd> col(features.data(),
                                              static_cast<Eigen::Index>(features.size()), 1);
  const Eigen::MatrixXd q = forward(col);
  return {q(0, 0), q(1, 0)};
}

double QNetwork::loss_and_gradient(const Eigen::MatrixXd& features, const std::vector<int>& actions,
                                   const Eigen::VectorXd& targets, const Eigen::VectorXd& weights,
                                   std::vector<Eigen::MatrixXd>& gradients,
                                   Eigen::VectorXd* td_errors) const {
  const Eigen::Index batch = features.cols();
  if (static_cast<Eigen::Index>(actions.size()) != batch || targets.size() != batch ||
      weights.size() != batch || batch == 0) {
    throw ContractError("loss_and_gradient: batch component sizes disagree");
  }
  Activations act;
  run_forward(features, act);

  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(2, batch);
  double loss = 0.0;
  if (td_errors) td_errors->resize(batch);
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int a = actions[b];
    const double td = targets[b] - act.q(a, b);
    if (td_errors) (*td_errors)[b] = td;
    loss += weights[b] * td * td;
    dq(a, b) = -2.0 * weights[b] * td * inv_b;
  }
  loss *= inv_b;

  gradients.resize(params_.size());
  for (std::size_t k = 0; k < params_.size(); ++k) {
    gradients[k].setZero(params_[k].rows(), params_[k].cols());
  }

  const int L = shape_.hidden_layers;
  Eigen::MatrixXd delta = dq;
  for (int layer = L; layer >= 0; --layer) {
    const Eigen::MatrixXd& h = layer == 0 ? act.input : act.post[layer - 1];
    const auto& w = params_[1 + 2 * layer];
    gradients[1 + 2 * layer].noalias() = delta * h.transpose();
    gradients[2 + 2 * layer] = delta.rowwise().sum();
    Eigen::MatrixXd upstream = w.transpose() * delta;
    if (layer > 0) {
      const auto& pre = act.pre[layer - 1];
      delta = upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    } else {
      delta = std::move(upstream);
    }
  }

  // delta now holds d loss / d input; route the embedding slots back to the table.
  const int dim = shape_.embedding_dim;
  const int block = kStatics + dim;
  auto& g_embed = gradients[0];
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int p = 0; p < shape_.i_max; ++p) {
      const int token = act.tokens[b][p];
      for (int k = 0; k < dim; ++k) g_embed(k, token) += delta(p * block + kStatics + k, b);
    }
  }
  return loss;
}

double QNetwork::loss(const Eigen::MatrixXd& features, const std::vector<int>& actions,
                      const Eigen::VectorXd& targets, const Eigen::VectorXd& weights) const {
  const Eigen::MatrixXd q = forward(features);
  double total = 0.0;
  for (Eigen::Index b = 0; b < features.cols(); ++b) {
    const double td = targets[b] - q(actions[b], b);
    total += weights[b] * td * td;
  }
  return total / static_cast<double>(features.cols());
}

nlohmann::json QNetwork::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t k = 0; k < params_.size(); ++k) {
    std::string name;
    if (k == 0) {
      name = "embedding";
    } else {
      const std::size_t layer = (k - 1) / 2;
      name = std::string(k % 2 == 1 ? "weight" : "bias") + "_" + std::to_string(layer);
    }
    // Column-major flat data.
    std::vector<double> flat(params_[k].data(), params_[k].data() + params_[k].size());
    layers.push_back(
        {{"name", name}, {"rows", params_[k].rows()}, {"cols", params_[k].cols()}, {"data", flat}});
  }
  return {{"shape",
           {{"i_max", shape_.i_max},
            {"hidden", shape_.hidden},
            {"hidden_layers", shape_.hidden_layers},
            {"vocabulary", shape_.vocabulary},
            {"embedding_dim", shape_.embedding_dim}}},
          {"storage", "column-major float64"},
          {"layers", layers}};
}

QNetwork QNetwork::from_json(const nlohmann::json& j) {
  QNetwork net;
  const auto& s = j.at("shape");
  net.shape_.i_max = s.at("i_max").get<int>();
  net.shape_.hidden = s.at("hidden").get<int>();
  net.shape_.hidden_layers = s.at("hidden_layers").get<int>();
  net.shape_.vocabulary = s.at("vocabulary").get<int>();
  net.shape_.embedding_dim = s.at("embedding_dim").get<int>();
  const QNetwork reference(net.shape_, 0);
  const auto& layers = j.at("layers");
  if (layers.size() != reference.params_.size()) {
    throw ValidationError("policy: expected " + std::to_string(reference.params_.size()) +
                          " parameter blocks, found " + std::to_string(layers.size()));
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto rows = layers[k].at("rows").get<Eigen::Index>();
    const auto cols = layers[k].at("cols").get<Eigen::Index>();
    if (rows != reference.params_[k].rows() || cols != reference.params_[k].cols()) {
      throw ValidationError("policy: layer " + std::to_string(k) + " has wrong dimensions");
    }
    const auto flat = layers[k].at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
      throw ValidationError("policy: layer " + std::to_string(k) + " data length mismatch");
    }
    net.params_.push_back(Eigen::Map<const Eigen::MatrixXd>(flat.data(), rows, cols));
  }
  return net;
}

bool QNetwork::operator==(const QNetwork& other) const {
  if (!(shape_ == other.shape_) || params_.size() != other.params_.size()) return false;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k] != other.params_[k]) return false;
  }
  return true;
}

Adam::Adam(const std::vector<Eigen::MatrixXd>& params, double lr, double beta1, double beta2,
           double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
  }
}

void Adam::step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grads[k];
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k].cwiseAbs2();
    params[k].array() -=
        lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

}  // namespace edgesplit
