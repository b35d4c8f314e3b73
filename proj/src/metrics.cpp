#include "evfuse/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "evfuse/errors.hpp"
#include "evfuse/format.hpp"

namespace evfuse {
namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(ErrorKind::kDimension,
         "prediction and truth lengths differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
  if (a == 0) fail(ErrorKind::kEmptyInput, "metrics need at least one sample");
}

}  // namespace

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  require_same_length(predicted.size(), truth.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

F1Scores f1_scores(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                   std::size_t class_count) {
  require_same_length(predicted.size(), truth.size());
  if (class_count < 2) fail(ErrorKind::kLabel, "F1 needs at least two classes");
  std::vector<std::size_t> tp(class_count), pred_count(class_count), support(class_count);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= class_count || truth[i] >= class_count) {
      fail(ErrorKind::kLabel, "label out of range at index " + std::to_string(i));
    }
    ++pred_count[predicted[i]];
    ++support[truth[i]];
    if (predicted[i] == truth[i]) ++tp[truth[i]];
  }
  F1Scores out;
  out.per_class.resize(class_count);
  double weighted = 0.0;
  for (std::size_t k = 0; k < class_count; ++k) {
    const double precision = pred_count[k] ? static_cast<double>(tp[k]) / static_cast<double>(pred_count[k]) : 0.0;
    const double recall = support[k] ? static_cast<double>(tp[k]) / static_cast<double>(support[k]) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    out.per_class[k] = f1;
    weighted += f1 * static_cast<double>(support[k]);
  }
  out.macro = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
              static_cast<double>(class_count);
  out.weighted = weighted / static_cast<double>(predicted.size());
  if (class_count == 2) out.binary = out.per_class[1];
  return out;
}

double roc_auc(std::span<const double> positive_score, std::span<const std::size_t> truth) {
  require_same_length(positive_score.size(), truth.size());
  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return positive_score[a] < positive_score[b]; });
  // Sum of mid-ranks of the positives (ties share their average rank).
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && positive_score[order[j]] == positive_score[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t r = i; r < j; ++r) {
      const std::size_t label = truth[order[r]];
      if (label > 1) fail(ErrorKind::kLabel, "AUC needs binary labels");
      if (label == 1) {
        rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) {
    fail(ErrorKind::kUndefinedAuc, "AUC is undefined when only one class is present");
  }
  const double pos = static_cast<double>(positives);
  const double u = rank_sum - pos * (pos + 1.0) / 2.0;
  return u / (pos * static_cast<double>(negatives));
}

MetricReport evaluate_predictions(std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> truth, std::size_t class_count,
                                  std::span<const double> positive_score) {
  MetricReport report;
  report.accuracy = accuracy(predicted, truth);
  const F1Scores f1 = f1_scores(predicted, truth, class_count);
  report.f1_binary = f1.binary;
  report.weighted_f1 = f1.weighted;
  report.macro_f1 = f1.macro;
  report.n = predicted.size();
  if (class_count == 2 && !positive_score.empty()) {
    const bool both = std::find(truth.begin(), truth.end(), 0) != truth.end() &&
                      std::find(truth.begin(), truth.end(), 1) != truth.end();
    if (both) report.auc = roc_auc(positive_score, truth);
  }
  return report;
}

std::string to_text(const MetricReport& report) {
  std::ostringstream out;
  out << "n = " << report.n << "\n";
  out << "accuracy = " << format_real(report.accuracy) << "\n";
  if (report.f1_binary) out << "f1 = " << format_real(*report.f1_binary) << "\n";
  if (report.auc) out << "auc = " << format_real(*report.auc) << "\n";
  out << "weighted_f1 = " << format_real(report.weighted_f1) << "\n";
  out << "macro_f1 = " << format_real(report.macro_f1) << "\n";
  return out.str();
}

}  // namespace evfuse
