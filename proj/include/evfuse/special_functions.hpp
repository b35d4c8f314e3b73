#pragma once

namespace evfuse {

// Positive-argument special functions used by the evidential loss. All throw
// kDomain for x <= 0 or non-finite x.

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

/// ln(1 + e^x) without overflow for large x.
double softplus(double x);

/// Derivative of softplus, 1 / (1 + e^-x).
double sigmoid(double x);

}  // namespace evfuse
