#pragma once

// Special functions used by the Gamma-shape and normal-mean families.
//
// All routines shift the argument upward with the standard recurrences until
// x >= 8 and then apply the asymptotic (Stirling / Bernoulli) series. Accuracy
// is about 1e-14 absolute in the ranges exercised by the simulations.

namespace srrs {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;
inline constexpr double kPi = 3.14159265358979323846264338;

/// log Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

/// psi(x) = d/dx log Gamma(x) for x > 0.
double digamma(double x);

/// psi'(x) for x > 0.
double trigamma(double x);

/// Solves digamma(theta) = y for theta > 0 by Newton iteration.
///
/// `guess` seeds the iteration when positive (warm start); otherwise the
/// usual starting point exp(y) + 1/2 (y >= -2.22) or -1/(y + gamma_E) is used.
double digamma_inverse(double y, double guess = 0.0);

/// Standard normal cdf.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

}  // namespace srrs
