#include "srrs/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace srrs {
namespace {

constexpr double kShift = 8.0;
constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || std::isinf(x)) {
    throw std::domain_error(std::string(name) + ": argument must be positive and finite, got " +
                            std::to_string(x));
  }
}

// Stirling series for log Gamma(z), z >= 8.
double log_gamma_asymptotic(double z) {
  const double w = 1.0 / z;
  const double w2 = w * w;
  double series = 1.0 / 156.0;
  series = series * w2 - 691.0 / 360360.0;
  series = series * w2 + 1.0 / 1188.0;
  series = series * w2 - 1.0 / 1680.0;
  series = series * w2 + 1.0 / 1260.0;
  series = series * w2 - 1.0 / 360.0;
  series = series * w2 + 1.0 / 12.0;
  return (z - 0.5) * std::log(z) - z + kHalfLog2Pi + series * w;
}

double digamma_asymptotic(double z) {
  const double w2 = 1.0 / (z * z);
  double series = -1.0 / 12.0;
  series = series * w2 + 691.0 / 32760.0;
  series = series * w2 - 1.0 / 132.0;
  series = series * w2 + 1.0 / 240.0;
  series = series * w2 - 1.0 / 252.0;
  series = series * w2 + 1.0 / 120.0;
  series = series * w2 - 1.0 / 12.0;
  return std::log(z) - 0.5 / z + series * w2;
}

double trigamma_asymptotic(double z) {
  const double w = 1.0 / z;
  const double w2 = w * w;
  double series = 7.0 / 6.0;
  series = series * w2 - 691.0 / 2730.0;
  series = series * w2 + 5.0 / 66.0;
  series = series * w2 - 1.0 / 30.0;
  series = series * w2 + 1.0 / 42.0;
  series = series * w2 - 1.0 / 30.0;
  series = series * w2 + 1.0 / 6.0;
  return w + 0.5 * w2 + series * w2 * w;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x >= kShift) return log_gamma_asymptotic(x);
  // log Gamma(x) = log Gamma(x + k) - log(x (x+1) ... (x+k-1))
  double product = 1.0;
  double z = x;
  while (z < kShift) {
    product *= z;
    z += 1.0;
  }
  return log_gamma_asymptotic(z) - std::log(product);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double correction = 0.0;
  double z = x;
  while (z < kShift) {
    correction += 1.0 / z;
    z += 1.0;
  }
  return digamma_asymptotic(z) - correction;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double correction = 0.0;
  double z = x;
  while (z < kShift) {
    correction += 1.0 / (z * z);
    z += 1.0;
  }
  return trigamma_asymptotic(z) + correction;
}

double digamma_inverse(double y, double guess) {
  if (!std::isfinite(y)) throw std::domain_error("digamma_inverse: argument must be finite");
  double theta = guess;
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    theta = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y + kEulerGamma);
  }
  // psi is increasing and concave, so after the first step Newton approaches
  // the root monotonically from below. Halving guards the first step.
  for (int iter = 0; iter < 100; ++iter) {
    const double residual = digamma(theta) - y;
    if (std::fabs(residual) <= 1e-12) break;
    double next = theta - residual / trigamma(theta);
    if (!(next > 0.0)) next = 0.5 * theta;
    const double step = next - theta;
    theta = next;
    if (std::fabs(step) <= 4e-16 * theta) break;
  }
  return theta;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

double normal_pdf(double x) { return 0.39894228040143267794 * std::exp(-0.5 * x * x); }

}  // namespace srrs
