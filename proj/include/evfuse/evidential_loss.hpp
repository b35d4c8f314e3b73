#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evfuse/opinion.hpp"

namespace evfuse {

/// Cross-entropy expected under Dir(d): psi(S) - psi(d_true).
double expected_ce_loss(const DirichletEvidence& dirichlet, std::size_t true_class);

/// d with the true-class component replaced by 1.
std::vector<double> adjust_dirichlet(const DirichletEvidence& dirichlet, std::size_t true_class);

/// KL(Dir(adjusted) || Dir(1, ..., 1)), in the log-gamma domain.
/// Throws kDomain if any component is below 1.
double kl_uniform(std::span<const double> adjusted);

/// Linear ramp min(1, epoch / anneal_epochs).
double anneal_coefficient(int epoch, int anneal_epochs);

/// expected_ce_loss + eta * kl_uniform(adjust_dirichlet(d)).
double sample_loss(const DirichletEvidence& dirichlet, std::size_t true_class, double eta);

/// Gradient of sample_loss with respect to the Dirichlet parameters d.
std::vector<double> sample_loss_gradient(const DirichletEvidence& dirichlet,
                                         std::size_t true_class, double eta);

/// Per-sample training objective: the fused term plus one term per view.
double overall_loss(const DirichletEvidence& fused, std::span<const DirichletEvidence> per_view,
                    std::size_t true_class, double eta);

}  // namespace evfuse
