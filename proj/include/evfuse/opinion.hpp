#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace evfuse {

// Tolerance on U + sum(b) = 1 for opinions built from floating-point masses.
inline constexpr double kMassTolerance = 1e-9;

/// Evidence vector e, Dirichlet parameters d = e + 1 and strength S = sum(d).
class DirichletEvidence {
 public:
  /// Throws kInvalidEvidence for negative or non-finite entries, kDimension for K < 2.
  static DirichletEvidence from_evidence(std::span<const double> evidence);

  std::size_t class_count() const noexcept { return evidence_.size(); }
  const std::vector<double>& evidence() const noexcept { return evidence_; }
  const std::vector<double>& params() const noexcept { return params_; }
  double strength() const noexcept { return strength_; }

 private:
  DirichletEvidence() = default;

  std::vector<double> evidence_;
  std::vector<double> params_;
  double strength_ = 0.0;
};

/// Subjective opinion over K singleton classes: beliefs plus an uncertainty
/// mass, summing to one. K is stored so that U = K/S stays recoverable.
class SubjectiveOpinion {
 public:
  /// Validates the masses: beliefs >= 0, 0 < U <= 1, sum within kMassTolerance.
  SubjectiveOpinion(std::vector<double> beliefs, double uncertainty);

  /// All beliefs zero, U = 1. Identity element of Dempster combination.
  static SubjectiveOpinion vacuous(std::size_t class_count);

  std::size_t class_count() const noexcept { return beliefs_.size(); }
  const std::vector<double>& beliefs() const noexcept { return beliefs_; }
  double uncertainty() const noexcept { return uncertainty_; }

  /// argmax of the beliefs, lowest index on ties.
  std::size_t predicted_class() const;

 private:
  std::vector<double> beliefs_;
  double uncertainty_;
};

DirichletEvidence dirichlet_from_evidence(std::span<const double> evidence);

SubjectiveOpinion opinion_from_dirichlet(const DirichletEvidence& dirichlet);

/// Inverse map: S = K/U, e_k = b_k * S. Throws kDegenerateOpinion when U == 0.
DirichletEvidence dirichlet_from_opinion(const SubjectiveOpinion& opinion);

/// Dirichlet mean p_k = d_k / S.
std::vector<double> expected_probabilities(const DirichletEvidence& dirichlet);

/// Index of the largest element; the lowest index wins ties. Empty input throws.
std::size_t argmax(std::span<const double> values);

}  // namespace evfuse
