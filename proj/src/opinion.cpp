#include "evfuse/opinion.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "evfuse/errors.hpp"

namespace evfuse {

DirichletEvidence DirichletEvidence::from_evidence(std::span<const double> evidence) {
  if (evidence.size() < 2) {
    fail(ErrorKind::kDimension, "evidence needs at least 2 classes, got " +
                                    std::to_string(evidence.size()));
  }
  DirichletEvidence out;
  out.evidence_.assign(evidence.begin(), evidence.end());
  out.params_.resize(evidence.size());
  for (std::size_t k = 0; k < evidence.size(); ++k) {
    const double e = evidence[k];
    if (!std::isfinite(e) || e < 0.0) {
      std::ostringstream msg;
      msg << "evidence[" << k << "] = " << e << " is not a finite non-negative value";
      fail(ErrorKind::kInvalidEvidence, msg.str());
    }
    out.params_[k] = e + 1.0;
  }
  out.strength_ = std::accumulate(out.params_.begin(), out.params_.end(), 0.0);
  return out;
}

SubjectiveOpinion::SubjectiveOpinion(std::vector<double> beliefs, double uncertainty)
    : beliefs_(std::move(beliefs)), uncertainty_(uncertainty) {
  if (beliefs_.size() < 2) {
    fail(ErrorKind::kDimension, "opinion needs at least 2 classes");
  }
  if (!(uncertainty_ > 0.0) || uncertainty_ > 1.0 + kMassTolerance) {
    fail(ErrorKind::kDegenerateOpinion,
         "uncertainty mass must lie in (0, 1], got " + std::to_string(uncertainty_));
  }
  double total = uncertainty_;
  for (double b : beliefs_) {
    if (!std::isfinite(b) || b < 0.0) {
      fail(ErrorKind::kInvalidEvidence, "belief masses must be finite and non-negative");
    }
    total += b;
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "opinion masses sum to " << total << ", expected 1";
    fail(ErrorKind::kInvalidEvidence, msg.str());
  }
}

SubjectiveOpinion SubjectiveOpinion::vacuous(std::size_t class_count) {
  return SubjectiveOpinion(std::vector<double>(class_count, 0.0), 1.0);
}

std::size_t SubjectiveOpinion::predicted_class() const { return argmax(beliefs_); }

DirichletEvidence dirichlet_from_evidence(std::span<const double> evidence) {
  return DirichletEvidence::from_evidence(evidence);
}

SubjectiveOpinion opinion_from_dirichlet(const DirichletEvidence& dirichlet) {
  const double s = dirichlet.strength();
  std::vector<double> beliefs(dirichlet.class_count());
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    beliefs[k] = dirichlet.evidence()[k] / s;
  }
  return SubjectiveOpinion(std::move(beliefs), static_cast<double>(beliefs.size()) / s);
}

DirichletEvidence dirichlet_from_opinion(const SubjectiveOpinion& opinion) {
  if (!(opinion.uncertainty() > 0.0)) {
    fail(ErrorKind::kDegenerateOpinion, "cannot invert an opinion with zero uncertainty");
  }
  const double s = static_cast<double>(opinion.class_count()) / opinion.uncertainty();
  std::vector<double> evidence(opinion.class_count());
  for (std::size_t k = 0; k < evidence.size(); ++k) {
    evidence[k] = opinion.beliefs()[k] * s;
  }
  return DirichletEvidence::from_evidence(evidence);
}

std::vector<double> expected_probabilities(const DirichletEvidence& dirichlet) {
  std::vector<double> p(dirichlet.params());
  for (double& v : p) v /= dirichlet.strength();
  return p;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::kEmptyInput, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace evfuse
