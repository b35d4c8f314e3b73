#include "evfuse/decision.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "evfuse/errors.hpp"
#include "evfuse/format.hpp"
#include "evfuse/fusion.hpp"

namespace evfuse {

void StagedDecisionPolicy::validate(const std::vector<std::string>& view_ids) const {
  if (view_order.size() < 2) {
    fail(ErrorKind::kConfiguration, "staged policy needs at least two views");
  }
  std::vector<std::string> a(view_order);
  std::vector<std::string> b(view_ids);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b || std::adjacent_find(a.begin(), a.end()) != a.end()) {
    fail(ErrorKind::kConfiguration, "view order must be a permutation of the dataset views");
  }
  if (!(t1 >= 0.0 && t1 <= 1.0) || !(t2 >= 0.0 && t2 <= 1.0)) {
    fail(ErrorKind::kConfiguration, "thresholds must lie in [0, 1]");
  }
}

const EvidentialClassifier& find_model(std::span<const EvidentialClassifier> models,
                                       std::string_view view_id) {
  for (const auto& m : models) {
    if (m.view_id() == view_id) return m;
  }
  fail(ErrorKind::kConfiguration, "no model for view '" + std::string(view_id) + "'");
}

namespace {

SubjectiveOpinion view_opinion(const FeatureSource& features,
                               std::span<const EvidentialClassifier> models,
                               const std::string& view_id) {
  const auto x = features(view_id);
  return opinion_from_dirichlet(find_model(models, view_id).forward(x));
}

}  // namespace

PredictionRecord staged_predict(const std::string& sample_id, const FeatureSource& features,
                                std::span<const EvidentialClassifier> models,
                                const StagedDecisionPolicy& policy) {
  const auto& order = policy.view_order;
  if (order.size() < 2) fail(ErrorKind::kConfiguration, "staged policy needs at least two views");
  try {
    std::vector<SubjectiveOpinion> opinions;
    opinions.push_back(view_opinion(features, models, order[0]));
    const double u1 = opinions[0].uncertainty();
    if (u1 <= policy.t1) {
      const auto cls = opinions[0].predicted_class();
      return PredictionRecord{sample_id, 1, opinions[0], cls, u1, std::nullopt, std::nullopt};
    }
    opinions.push_back(view_opinion(features, models, order[1]));
    FusionResult dual = combine_pair(opinions[0], opinions[1]);
    const double u2 = dual.opinion.uncertainty();
    if (u2 <= policy.t2) {
      const auto cls = dual.opinion.predicted_class();
      return PredictionRecord{sample_id, 2, std::move(dual.opinion), cls, u1, u2, std::nullopt};
    }
    for (std::size_t v = 2; v < order.size(); ++v) {
      opinions.push_back(view_opinion(features, models, order[v]));
    }
    FusionResult all = combine_all(opinions);
    const double u3 = all.opinion.uncertainty();
    const auto cls = all.opinion.predicted_class();
    return PredictionRecord{sample_id, 3, std::move(all.opinion), cls, u1, u2, u3};
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::kTotalConflict) {
      fail(ErrorKind::kTotalConflict, "sample " + sample_id + ": " + err.what());
    }
    throw;
  }
}

StageOpinions stage_opinions(const FeatureSource& features,
                             std::span<const EvidentialClassifier> models,
                             const std::vector<std::string>& view_order) {
  if (view_order.size() < 2) fail(ErrorKind::kConfiguration, "stage opinions need two views");
  std::vector<SubjectiveOpinion> opinions;
  for (const auto& id : view_order) opinions.push_back(view_opinion(features, models, id));
  SubjectiveOpinion dual = combine_pair(opinions[0], opinions[1]).opinion;
  SubjectiveOpinion tri = combine_all(opinions).opinion;
  return StageOpinions{opinions[0], std::move(dual), std::move(tri)};
}

namespace {

// numpy-style linspace: the last point is exactly `hi`.
std::vector<double> grid(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
  out.back() = hi;
  return out;
}

}  // namespace

ThresholdChoice tune_thresholds(std::span<const double> u_single, std::span<const double> u_dual,
                                std::span<const StagePredictions> predictions,
                                std::span<const std::size_t> labels, std::size_t grid_size) {
  const std::size_t n = u_single.size();
  if (u_dual.size() != n || predictions.size() != n || labels.size() != n) {
    fail(ErrorKind::kDimension, "tune_thresholds inputs differ in length");
  }
  if (n == 0) fail(ErrorKind::kEmptyInput, "tune_thresholds needs at least one sample");
  if (grid_size == 0) fail(ErrorKind::kConfiguration, "grid size must be positive");
  const auto [min1, max1] = std::minmax_element(u_single.begin(), u_single.end());
  const auto [min2, max2] = std::minmax_element(u_dual.begin(), u_dual.end());
  const auto range1 = grid(*min1, *max1, grid_size);
  const auto range2 = grid(*min2, *max2, grid_size);

  std::vector<std::array<bool, 3>> right(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < 3; ++s) right[i][s] = predictions[i][s] == labels[i];
  }
  ThresholdChoice best;
  for (double t1 : range1) {
    for (double t2 : range2) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t stage = u_single[i] <= t1 ? 0 : u_dual[i] <= t2 ? 1 : 2;
        correct += right[i][stage] ? 1 : 0;
      }
      if (correct >= best.correct) best = ThresholdChoice{t1, t2, correct};
    }
  }
  return best;
}

void ViewAccuracies::set_pair(const std::string& a, const std::string& b, double accuracy) {
  pairs[std::minmax(a, b)] = accuracy;
}

std::optional<double> ViewAccuracies::pair(const std::string& a, const std::string& b) const {
  const auto it = pairs.find(std::minmax(a, b));
  if (it == pairs.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> select_view_order(const ViewAccuracies& accuracies,
                                           const std::vector<std::string>& override_order) {
  if (!override_order.empty()) return override_order;
  if (accuracies.single.size() < 2) {
    fail(ErrorKind::kConfiguration, "view order selection needs accuracies for two or more views");
  }
  // std::map iterates ids in lexicographic order, so strict > keeps the smaller id on ties.
  std::string first;
  double best = -1.0;
  for (const auto& [id, acc] : accuracies.single) {
    if (acc > best) {
      best = acc;
      first = id;
    }
  }
  std::string partner;
  best = -1.0;
  for (const auto& [id, acc] : accuracies.single) {
    if (id == first) continue;
    const auto pair_acc = accuracies.pair(first, id);
    if (!pair_acc) {
      fail(ErrorKind::kConfiguration, "missing pair accuracy for " + first + "+" + id);
    }
    if (*pair_acc > best) {
      best = *pair_acc;
      partner = id;
    }
  }
  std::vector<std::string> order{first, partner};
  for (const auto& [id, acc] : accuracies.single) {
    if (id != first && id != partner) order.push_back(id);
  }
  return order;
}

StageDistribution stage_distribution(std::span<const PredictionRecord> records,
                                     const std::vector<std::string>& view_order) {
  if (records.empty()) fail(ErrorKind::kEmptyInput, "stage distribution of no records");
  if (view_order.size() < 2) fail(ErrorKind::kConfiguration, "stage distribution needs two views");
  StageDistribution dist;
  for (const auto& r : records) {
    if (r.stage < 1 || r.stage > 3) fail(ErrorKind::kConfiguration, "record with invalid stage");
    ++dist.counts[static_cast<std::size_t>(r.stage - 1)];
  }
  for (std::size_t s = 0; s < 3; ++s) {
    dist.fractions[s] = static_cast<double>(dist.counts[s]) / static_cast<double>(records.size());
  }
  dist.views[0] = view_order[0];
  dist.views[1] = view_order[0] + "+" + view_order[1];
  dist.views[2] = view_order[0];
  for (std::size_t v = 1; v < view_order.size(); ++v) dist.views[2] += "+" + view_order[v];
  return dist;
}

void write_predictions_csv(std::span<const PredictionRecord> records,
                           std::span<const std::size_t> truth, std::ostream& out) {
  if (truth.size() != records.size()) {
    fail(ErrorKind::kDimension, "truth labels do not match prediction records");
  }
  const auto cell = [](const std::optional<double>& u) { return u ? format_real(*u) : std::string(); };
  out << "sample_id,stage,u_single,u_dual,u_tri,predicted_class,true_class\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << r.sample_id << ',' << r.stage << ',' << cell(r.u_single) << ',' << cell(r.u_dual) << ','
        << cell(r.u_tri) << ',' << r.predicted_class << ',' << truth[i] << '\n';
  }
}

}  // namespace evfuse
