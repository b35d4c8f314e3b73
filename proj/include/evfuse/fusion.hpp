#pragma once

#include <cstddef>
#include <span>

#include "evfuse/opinion.hpp"

namespace evfuse {

// 1 - C below this is treated as total conflict.
inline constexpr double kConflictEpsilon = 1e-12;

struct FusionResult {
  SubjectiveOpinion opinion;
  double conflict = 0.0;  // C of the last pairwise step, 0 for a single input
  std::size_t inputs = 0;
};

/// C = sum over i != j of b1_i * b2_j.
double conflict(const SubjectiveOpinion& first, const SubjectiveOpinion& second);

/// Reduced Dempster combination of two opinions over the same K singleton classes.
FusionResult combine_pair(const SubjectiveOpinion& first, const SubjectiveOpinion& second);

/// Left fold of combine_pair in the supplied order.
FusionResult combine_all(std::span<const SubjectiveOpinion> opinions);

}  // namespace evfuse
