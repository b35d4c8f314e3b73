#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evfuse/classifier.hpp"
#include "evfuse/data.hpp"

namespace evfuse {

enum class Optimizer { kGradientDescent, kAdam };

std::string_view to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  int anneal_epochs = 50;
  std::size_t batch_size = 0;  // 0 = full batch
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{64};
  Activation activation = Activation::kTanh;

  void validate() const;
};

/// Aligned rows for every view plus their labels.
struct TrainingBatch {
  std::vector<Eigen::MatrixXd> views;  // one samples x features matrix per view
  std::vector<std::size_t> labels;
};

TrainingBatch make_batch(const MultiViewDataset& dataset, std::span<const std::size_t> rows);

using LayerGradients = std::vector<DenseLayer>;

struct ObjectiveResult {
  double loss = 0.0;                          // summed over the batch
  std::vector<LayerGradients> gradients;      // one per view, empty unless requested
};

/// Summed joint objective: for every sample, the loss of the Dempster-fused
/// opinion (mapped back to a Dirichlet) plus each view's own loss.
ObjectiveResult batch_objective(std::span<const EvidentialClassifier> models,
                                const TrainingBatch& batch, double eta, bool with_gradient);

struct TrainResult {
  std::vector<EvidentialClassifier> models;
  std::vector<double> epoch_loss;  // mean per-sample objective of each epoch
};

/// Fresh models for every view, seeded from config.seed and the view index.
std::vector<EvidentialClassifier> init_models(const std::vector<std::string>& view_ids,
                                              const std::vector<std::size_t>& input_dims,
                                              std::size_t class_count, const TrainConfig& config);

/// Joint training of all views on the training split. Throws kDivergence
/// (message carries the epoch) on a non-finite objective.
TrainResult train(const MultiViewDataset& dataset, const TrainConfig& config);

TrainResult train(std::vector<EvidentialClassifier> models, const TrainingBatch& batch,
                  const TrainConfig& config);

struct GradientCheckReport {
  std::vector<double> relative_errors;
  double max_relative_error = 0.0;
  bool gradients_finite = true;
};

/// Central finite differences (step h) against the analytic gradient of
/// batch_objective at `coordinates` randomly drawn parameters.
GradientCheckReport gradient_check(std::span<const EvidentialClassifier> models,
                                   const TrainingBatch& batch, double eta,
                                   std::size_t coordinates = 200, std::uint64_t seed = 0,
                                   double step = 1e-5);

}  // namespace evfuse
