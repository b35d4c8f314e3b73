#include "evfuse/classifier.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "evfuse/errors.hpp"
#include "evfuse/special_functions.hpp"

namespace evfuse {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kTanh: return "tanh";
    case Activation::kSoftplus: return "softplus";
    case Activation::kLinear: return "linear";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "softplus") return Activation::kSoftplus;
  if (name == "linear") return Activation::kLinear;
  fail(ErrorKind::kConfiguration, "unknown activation '" + std::string(name) + "'");
}

double activate(Activation activation, double x) {
  switch (activation) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kSoftplus: return softplus(x);
    case Activation::kLinear: return x;
  }
  return x;
}

double activate_derivative(Activation activation, double x) {
  switch (activation) {
    case Activation::kTanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::kSoftplus: return sigmoid(x);
    case Activation::kLinear: return 1.0;
  }
  return 1.0;
}

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) fail(ErrorKind::kConfiguration, "layer_dims needs input and output widths");
  for (std::size_t d : dims) {
    if (d == 0) fail(ErrorKind::kConfiguration, "layer widths must be positive");
  }
  if (dims.back() < 2) fail(ErrorKind::kConfiguration, "output width K must be at least 2");
}

}  // namespace

EvidentialClassifier::EvidentialClassifier(std::string view_id,
                                           std::vector<std::size_t> layer_dims,
                                           Activation activation, std::uint64_t seed)
    : view_id_(std::move(view_id)),
      layer_dims_(std::move(layer_dims)),
      activation_(activation),
      seed_(seed) {
  check_dims(layer_dims_);
  std::mt19937_64 rng(seed_);
  for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_dims_[l]);
    const auto out = static_cast<Eigen::Index>(layer_dims_[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = dist(rng);
    }
    layers_.push_back(std::move(layer));
  }
}

EvidentialClassifier::EvidentialClassifier(std::string view_id,
                                           std::vector<std::size_t> layer_dims,
                                           Activation activation, std::uint64_t seed,
                                           std::vector<DenseLayer> layers)
    : view_id_(std::move(view_id)),
      layer_dims_(std::move(layer_dims)),
      activation_(activation),
      seed_(seed),
      layers_(std::move(layers)) {
  check_dims(layer_dims_);
  if (layers_.size() + 1 != layer_dims_.size()) {
    fail(ErrorKind::kDimension, "layer count does not match layer_dims");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_dims_[l]);
    const auto out = static_cast<Eigen::Index>(layer_dims_[l + 1]);
    if (layers_[l].weights.rows() != out || layers_[l].weights.cols() != in ||
        layers_[l].bias.size() != out) {
      fail(ErrorKind::kDimension, "layer " + std::to_string(l) + " shape does not match layer_dims");
    }
  }
}

std::size_t EvidentialClassifier::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    total += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  }
  return total;
}

double& EvidentialClassifier::parameter(std::size_t flat_index) {
  for (auto& layer : layers_) {
    const auto w = static_cast<std::size_t>(layer.weights.size());
    if (flat_index < w) return layer.weights.data()[flat_index];
    flat_index -= w;
    const auto b = static_cast<std::size_t>(layer.bias.size());
    if (flat_index < b) return layer.bias[static_cast<Eigen::Index>(flat_index)];
    flat_index -= b;
  }
  fail(ErrorKind::kDimension, "parameter index out of range");
}

DirichletEvidence EvidentialClassifier::forward(std::span<const double> features) const {
  if (features.size() != input_dim()) {
    std::ostringstream msg;
    msg << "view '" << view_id_ << "' expects " << input_dim() << " features, got "
        << features.size();
    fail(ErrorKind::kDimension, msg.str());
  }
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) row(0, static_cast<Eigen::Index>(c)) = features[c];
  const Eigen::MatrixXd e = evidence(row);
  std::vector<double> out(static_cast<std::size_t>(e.cols()));
  for (Eigen::Index k = 0; k < e.cols(); ++k) out[static_cast<std::size_t>(k)] = e(0, k);
  return dirichlet_from_evidence(out);
}

Eigen::MatrixXd EvidentialClassifier::evidence(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.cols()) != input_dim()) {
    std::ostringstream msg;
    msg << "view '" << view_id_ << "' expects " << input_dim() << " features, got "
        << features.cols();
    fail(ErrorKind::kDimension, msg.str());
  }
  Eigen::MatrixXd act = features;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = act * layers_[l].weights.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    const bool output = l + 1 == layers_.size();
    act = z.unaryExpr([&](double x) { return output ? softplus(x) : activate(activation_, x); });
  }
  return act;
}

}  // namespace evfuse
