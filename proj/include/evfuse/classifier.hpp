#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "evfuse/opinion.hpp"

namespace evfuse {

enum class Activation { kTanh, kSoftplus, kLinear };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Per-view MLP whose softplus head emits a non-negative evidence vector.
///
/// layer_dims runs input -> hidden... -> K. Hidden layers apply `activation`,
/// the output layer always applies softplus. Two entries (input, K) give a
/// linear evidence model.
class EvidentialClassifier {
 public:
  /// Glorot-uniform weights, zero biases, drawn from `seed`.
  EvidentialClassifier(std::string view_id, std::vector<std::size_t> layer_dims,
                       Activation activation, std::uint64_t seed);

  /// Takes explicit parameters (checkpoint loading). Shapes must match layer_dims.
  EvidentialClassifier(std::string view_id, std::vector<std::size_t> layer_dims,
                       Activation activation, std::uint64_t seed, std::vector<DenseLayer> layers);

  const std::string& view_id() const noexcept { return view_id_; }
  const std::vector<std::size_t>& layer_dims() const noexcept { return layer_dims_; }
  std::size_t input_dim() const noexcept { return layer_dims_.front(); }
  std::size_t class_count() const noexcept { return layer_dims_.back(); }
  Activation activation() const noexcept { return activation_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  /// Number of scalar weights and biases.
  std::size_t parameter_count() const;
  /// Flat addressing over all weights then biases of each layer, layer by layer.
  double& parameter(std::size_t flat_index);

  DirichletEvidence forward(std::span<const double> features) const;

  /// Evidence for every row of `features` (n x input_dim), as n x K.
  Eigen::MatrixXd evidence(const Eigen::MatrixXd& features) const;

 private:
  std::string view_id_;
  std::vector<std::size_t> layer_dims_;
  Activation activation_;
  std::uint64_t seed_;
  std::vector<DenseLayer> layers_;
};

double activate(Activation activation, double x);
double activate_derivative(Activation activation, double x);

}  // namespace evfuse
