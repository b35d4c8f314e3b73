#include "evfuse/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "evfuse/errors.hpp"

namespace evfuse {
namespace {

// Arguments are shifted up by recurrence until this point, then the
// asymptotic series is accurate to well below 1e-15 relative.
constexpr double kAsymptoticFrom = 12.0;

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    fail(ErrorKind::kDomain, std::string(name) + " requires a finite positive argument, got " +
                                 std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x == 1.0 || x == 2.0) return 0.0;
  // lnG(x) = lnG(x + n) - ln(x (x+1) ... (x+n-1))
  double shift = 0.0;
  double product = 1.0;
  while (x < kAsymptoticFrom) {
    product *= x;
    x += 1.0;
    // keep the running product in range for tiny x
    if (product > 1e280) {
      shift += std::log(product);
      product = 1.0;
    }
  }
  shift += std::log(product);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling series with Bernoulli coefficients B_{2n} / (2n (2n - 1)).
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 +
                                                     inv2 * (1.0 / 156.0)))))));
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (x - 0.5) * std::log(x) - x + half_log_two_pi + series - shift;
}

double digamma(double x) {
  require_positive(x, "digamma");
  double result = 0.0;
  while (x < kAsymptoticFrom) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  // ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
  return result + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double result = 0.0;
  while (x < kAsymptoticFrom) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}
  const double series =
      inv * inv2 *
      (1.0 / 6.0 -
       inv2 * (1.0 / 30.0 -
               inv2 * (1.0 / 42.0 -
                       inv2 * (1.0 / 30.0 -
                               inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
  return result + inv + 0.5 * inv2 + series;
}

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace evfuse
