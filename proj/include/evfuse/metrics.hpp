#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evfuse {

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct F1Scores {
  std::vector<double> per_class;
  std::optional<double> binary;  // F1 of class 1, K == 2 only
  double weighted = 0.0;
  double macro = 0.0;
};

/// One-vs-rest F1 per class. A class with P + R = 0 scores 0; macro averages
/// all K classes, weighted uses the true-class supports.
F1Scores f1_scores(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                   std::size_t class_count);

/// Mann-Whitney AUC with half credit for tied scores. truth holds 0/1.
double roc_auc(std::span<const double> positive_score, std::span<const std::size_t> truth);

struct MetricReport {
  double accuracy = 0.0;
  std::optional<double> f1_binary;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  std::optional<double> auc;
  std::size_t n = 0;
};

/// AUC is filled in for binary tasks when both classes are present;
/// `positive_score` may be empty for multi-class tasks.
MetricReport evaluate_predictions(std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> truth, std::size_t class_count,
                                  std::span<const double> positive_score);

/// key = value lines, 6 significant digits.
std::string to_text(const MetricReport& report);

}  // namespace evfuse
