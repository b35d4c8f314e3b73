#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evfuse/classifier.hpp"
#include "evfuse/data.hpp"
#include "evfuse/decision.hpp"
#include "evfuse/metrics.hpp"
#include "evfuse/training.hpp"

namespace evfuse {

struct RunConfig {
  // Exactly one of views (+ labels) or synthetic.
  std::vector<ViewSource> views;
  std::filesystem::path labels;
  IdColumn id_column = IdColumn::kFirstColumn;
  std::optional<SyntheticConfig> synthetic;

  SplitFractions fractions;
  std::optional<std::array<std::filesystem::path, 3>> split_files;  // train, validation, test

  TrainConfig train;

  std::vector<std::string> view_order;  // empty = choose from validation accuracies
  std::optional<double> t1;
  std::optional<double> t2;
  std::size_t grid_size = 100;
  bool tune_on_test = false;  // literal reproduction mode: tune on the test split

  std::filesystem::path output_dir = "evfuse_out";
  int repeat = 1;
  std::uint64_t seed = 0;
  std::size_t histogram_bins = 20;

  void validate() const;
  /// key = value echo of every field, for manifests.
  std::string describe() const;
};

/// Loads or generates the data, splits it and z-scores it with training statistics.
MultiViewDataset prepare_dataset(const RunConfig& config);

/// Per-row feature access over a prepared dataset.
FeatureSource row_features(const MultiViewDataset& dataset, std::size_t row);

/// Metrics of one view combination (single view, pair, or all views fused).
struct CombinationReport {
  std::vector<std::string> views;
  MetricReport metrics;
  double mean_uncertainty = 0.0;
};

/// Every single view, every pair, and the fusion of all views, evaluated on `rows`.
std::vector<CombinationReport> combination_report(const MultiViewDataset& dataset,
                                                  std::span<const EvidentialClassifier> models,
                                                  std::span<const std::size_t> rows);

ViewAccuracies view_accuracies(const std::vector<CombinationReport>& report);

struct TuneOutcome {
  std::vector<std::string> view_order;
  ThresholdChoice choice;
  Split split = Split::kValidation;
  std::size_t n = 0;
};

TuneOutcome tune_policy(const MultiViewDataset& dataset, std::span<const EvidentialClassifier> models,
                        const RunConfig& config);

struct EvaluationOutcome {
  std::vector<PredictionRecord> records;
  std::vector<std::size_t> truth;
  MetricReport staged;
  MetricReport tri_view;  // all views fused in policy order, same rows
  StageDistribution distribution;
  std::vector<std::string> audit;  // ordered events
};

EvaluationOutcome evaluate_policy(const MultiViewDataset& dataset,
                                  std::span<const EvidentialClassifier> models,
                                  const StagedDecisionPolicy& policy);

/// Mean uncertainty of the deciding opinions of correct and incorrect records.
struct UncertaintySplit {
  double correct_mean = 0.0;
  double incorrect_mean = 0.0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
};

UncertaintySplit uncertainty_by_correctness(const EvaluationOutcome& outcome);

// Commands. Each writes its artifacts under config.output_dir and updates
// manifest.txt.
void run_generate(const RunConfig& config);
void run_train(const RunConfig& config);
void run_tune(const RunConfig& config);
void run_evaluate(const RunConfig& config);
void run_all(const RunConfig& config);

}  // namespace evfuse
