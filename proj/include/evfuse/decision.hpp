#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evfuse/classifier.hpp"
#include "evfuse/opinion.hpp"

namespace evfuse {

/// Single -> dual -> all-view routing. view_order[0] decides alone when its
/// uncertainty is <= t1; fused with view_order[1] it decides when that fused
/// uncertainty is <= t2; otherwise every view is fused.
struct StagedDecisionPolicy {
  std::vector<std::string> view_order;
  double t1 = 0.0;
  double t2 = 0.0;

  /// view_order must be a permutation of `view_ids` with at least two views.
  void validate(const std::vector<std::string>& view_ids) const;
};

struct PredictionRecord {
  std::string sample_id;
  int stage = 0;  // 1, 2 or 3
  SubjectiveOpinion opinion;
  std::size_t predicted_class = 0;
  std::optional<double> u_single;
  std::optional<double> u_dual;
  std::optional<double> u_tri;
};

/// Yields one view's feature vector for the sample being classified.
using FeatureSource = std::function<std::vector<double>(std::string_view view_id)>;

const EvidentialClassifier& find_model(std::span<const EvidentialClassifier> models,
                                       std::string_view view_id);

/// Views past the deciding stage are never requested from `features`.
PredictionRecord staged_predict(const std::string& sample_id, const FeatureSource& features,
                                std::span<const EvidentialClassifier> models,
                                const StagedDecisionPolicy& policy);

/// Opinions a sample would get at every stage; used to feed threshold tuning.
struct StageOpinions {
  SubjectiveOpinion single;
  SubjectiveOpinion dual;
  SubjectiveOpinion tri;
};

StageOpinions stage_opinions(const FeatureSource& features,
                             std::span<const EvidentialClassifier> models,
                             const std::vector<std::string>& view_order);

/// Per-sample predicted class at stages 1, 2, 3.
using StagePredictions = std::array<std::size_t, 3>;

struct ThresholdChoice {
  double t1 = 0.0;
  double t2 = 0.0;
  std::size_t correct = 0;
};

/// Exhaustive grid over grid_size evenly spaced values spanning [min, max] of
/// each uncertainty vector, t1 outer and t2 inner, both ascending. Ties
/// replace the incumbent, so the last maximiser in iteration order wins.
ThresholdChoice tune_thresholds(std::span<const double> u_single, std::span<const double> u_dual,
                                std::span<const StagePredictions> predictions,
                                std::span<const std::size_t> labels, std::size_t grid_size = 100);

/// Validation accuracies used to choose the stage order. Pair keys are stored
/// with the lexicographically smaller id first.
struct ViewAccuracies {
  std::map<std::string, double> single;
  std::map<std::pair<std::string, std::string>, double> pairs;

  void set_pair(const std::string& a, const std::string& b, double accuracy);
  std::optional<double> pair(const std::string& a, const std::string& b) const;
};

/// Stage 1 = best single view, stage 2 = its best partner, then the rest in
/// id order. Ties go to the lexicographically smaller id. A non-empty override
/// is returned as given.
std::vector<std::string> select_view_order(const ViewAccuracies& accuracies,
                                           const std::vector<std::string>& override_order = {});

struct StageDistribution {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> fractions{};
  std::array<std::string, 3> views;  // e.g. "A", "A+B", "A+B+C"
};

StageDistribution stage_distribution(std::span<const PredictionRecord> records,
                                     const std::vector<std::string>& view_order);

/// CSV with columns sample_id,stage,u_single,u_dual,u_tri,predicted_class,true_class.
void write_predictions_csv(std::span<const PredictionRecord> records,
                           std::span<const std::size_t> truth, std::ostream& out);

}  // namespace evfuse
