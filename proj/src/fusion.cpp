#include "evfuse/fusion.hpp"

#include <sstream>
#include <vector>

#include "evfuse/errors.hpp"

namespace evfuse {
namespace {

void require_same_classes(const SubjectiveOpinion& a, const SubjectiveOpinion& b) {
  if (a.class_count() != b.class_count()) {
    std::ostringstream msg;
    msg << "cannot fuse opinions over " << a.class_count() << " and " << b.class_count()
        << " classes";
    fail(ErrorKind::kDimension, msg.str());
  }
}

}  // namespace

double conflict(const SubjectiveOpinion& first, const SubjectiveOpinion& second) {
  require_same_classes(first, second);
  const auto& b1 = first.beliefs();
  const auto& b2 = second.beliefs();
  double c = 0.0;
  for (std::size_t i = 0; i < b1.size(); ++i) {
    for (std::size_t j = 0; j < b2.size(); ++j) {
      if (i != j) c += b1[i] * b2[j];
    }
  }
  return c;
}

FusionResult combine_pair(const SubjectiveOpinion& first, const SubjectiveOpinion& second) {
  const double c = conflict(first, second);
  const double norm = 1.0 - c;
  if (norm < kConflictEpsilon) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "total conflict between opinions (C = " << c << ")";
    fail(ErrorKind::kTotalConflict, msg.str());
  }
  const auto& b1 = first.beliefs();
  const auto& b2 = second.beliefs();
  const double u1 = first.uncertainty();
  const double u2 = second.uncertainty();
  std::vector<double> beliefs(b1.size());
  for (std::size_t k = 0; k < b1.size(); ++k) {
    beliefs[k] = (b1[k] * b2[k] + b1[k] * u2 + b2[k] * u1) / norm;
  }
  return FusionResult{SubjectiveOpinion(std::move(beliefs), u1 * u2 / norm), c, 2};
}

FusionResult combine_all(std::span<const SubjectiveOpinion> opinions) {
  if (opinions.empty()) fail(ErrorKind::kEmptyInput, "combine_all needs at least one opinion");
  FusionResult acc{opinions.front(), 0.0, 1};
  for (std::size_t v = 1; v < opinions.size(); ++v) {
    FusionResult step = combine_pair(acc.opinion, opinions[v]);
    acc = FusionResult{std::move(step.opinion), step.conflict, v + 1};
  }
  return acc;
}

}  // namespace evfuse
