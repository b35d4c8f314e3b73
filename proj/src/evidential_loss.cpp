#include "evfuse/evidential_loss.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "evfuse/errors.hpp"
#include "evfuse/special_functions.hpp"

namespace evfuse {
namespace {

void require_class(const DirichletEvidence& d, std::size_t true_class) {
  if (true_class >= d.class_count()) {
    fail(ErrorKind::kLabel, "class index " + std::to_string(true_class) + " out of range for K = " +
                                std::to_string(d.class_count()));
  }
}

}  // namespace

double expected_ce_loss(const DirichletEvidence& dirichlet, std::size_t true_class) {
  require_class(dirichlet, true_class);
  return digamma(dirichlet.strength()) - digamma(dirichlet.params()[true_class]);
}

std::vector<double> adjust_dirichlet(const DirichletEvidence& dirichlet, std::size_t true_class) {
  require_class(dirichlet, true_class);
  std::vector<double> adjusted(dirichlet.params());
  adjusted[true_class] = 1.0;
  return adjusted;
}

double kl_uniform(std::span<const double> adjusted) {
  if (adjusted.empty()) fail(ErrorKind::kEmptyInput, "kl_uniform of an empty vector");
  double total = 0.0;
  for (double a : adjusted) {
    if (!(a >= 1.0)) {
      fail(ErrorKind::kDomain, "kl_uniform needs parameters >= 1, got " + std::to_string(a));
    }
    total += a;
  }
  const double k = static_cast<double>(adjusted.size());
  const double psi_total = digamma(total);
  double kl = log_gamma(total) - log_gamma(k);
  for (double a : adjusted) {
    if (a == 1.0) continue;  // lnG(1) = 0 and (a - 1) = 0
    kl -= log_gamma(a);
    kl += (a - 1.0) * (digamma(a) - psi_total);
  }
  // exact zero at the uniform fixed point; rounding can leave a tiny negative elsewhere
  return std::max(kl, 0.0);
}

double anneal_coefficient(int epoch, int anneal_epochs) {
  if (epoch < 0 || anneal_epochs < 1) {
    fail(ErrorKind::kConfiguration, "anneal_coefficient needs epoch >= 0 and anneal_epochs >= 1");
  }
  return std::min(1.0, static_cast<double>(epoch) / static_cast<double>(anneal_epochs));
}

double sample_loss(const DirichletEvidence& dirichlet, std::size_t true_class, double eta) {
  double loss = expected_ce_loss(dirichlet, true_class);
  if (eta != 0.0) loss += eta * kl_uniform(adjust_dirichlet(dirichlet, true_class));
  return loss;
}

std::vector<double> sample_loss_gradient(const DirichletEvidence& dirichlet,
                                         std::size_t true_class, double eta) {
  require_class(dirichlet, true_class);
  const auto& d = dirichlet.params();
  const std::size_t k_count = d.size();
  std::vector<double> grad(k_count, trigamma(dirichlet.strength()));
  grad[true_class] -= trigamma(d[true_class]);
  if (eta != 0.0) {
    // dKL/d(adj_m) = (adj_m - 1) psi'(adj_m) - (S_adj - K) psi'(S_adj); the true
    // component is pinned to 1 and receives no gradient.
    double adjusted_total = 1.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (k != true_class) adjusted_total += d[k];
    }
    const double shared =
        (adjusted_total - static_cast<double>(k_count)) * trigamma(adjusted_total);
    for (std::size_t k = 0; k < k_count; ++k) {
      if (k == true_class) continue;
      grad[k] += eta * ((d[k] - 1.0) * trigamma(d[k]) - shared);
    }
  }
  return grad;
}

double overall_loss(const DirichletEvidence& fused, std::span<const DirichletEvidence> per_view,
                    std::size_t true_class, double eta) {
  if (per_view.empty()) fail(ErrorKind::kEmptyInput, "overall_loss needs at least one view");
  double loss = sample_loss(fused, true_class, eta);
  for (const auto& view : per_view) loss += sample_loss(view, true_class, eta);
  return loss;
}

}  // namespace evfuse
