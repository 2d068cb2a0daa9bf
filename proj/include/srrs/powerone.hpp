#pragma once

// Open-ended (power-one) sequential tests built on an estimated likelihood
// ratio, plus the closed-form Gaussian-mixture analog for the normal mean.

#include <algorithm>
#include <cstdint>
#include <limits>

#include "srrs/estimators.hpp"
#include "srrs/models.hpp"

namespace srrs {

/// Outcome of one stopping-rule run.
struct StoppingRecord {
  std::int64_t stop_time = 0;      // n_max when truncated
  bool truncated = false;
  double terminal_log_stat = 0.0;  // log statistic at stop_time
  double overshoot = 0.0;          // terminal_log_stat - log threshold
};

struct TestState {
  std::int64_t n = 0;
  double log_lambda = 0.0;
  EstimatorState est;
  double record_high = 0.0;  // max over 0..n of log Lambda (Lambda_0 = 1)
};

inline TestState init_test(const Estimator& estimator) { return {0, 0.0, estimator.init(), 0.0}; }

/// Scores obs with the current estimate, then folds obs into the estimator.
inline void test_step(const Estimator& estimator, TestState& state, const Observation& obs) {
  state.log_lambda += estimator.score(state.est, obs);
  estimator.update(state.est, obs);
  ++state.n;
  state.record_high = std::max(state.record_high, state.log_lambda);
}

/// tau_b = min{n >= 1 : log Lambda_n >= b}, truncated at n_max.
/// `next` is any callable returning the next Observation.
template <class Source>
StoppingRecord run_tau_b(const Estimator& estimator, double b, Source&& next, std::int64_t n_max) {
  TestState state = init_test(estimator);
  while (state.n < n_max) {
    test_step(estimator, state, next());
    if (state.log_lambda >= b) return {state.n, false, state.log_lambda, state.log_lambda - b};
  }
  return {n_max, true, state.log_lambda, state.log_lambda - b};
}

/// Normal-mean test whose n-th estimate includes x_n itself
/// (mu_n = mean of x_1..x_n). Included only to exhibit how that choice
/// destroys the e^{-b} level bound.
template <class Source>
StoppingRecord run_tau_b_anticipating(double b, Source&& next_x, std::int64_t n_max) {
  double sum = 0.0;
  double log_lambda = 0.0;
  for (std::int64_t n = 1; n <= n_max; ++n) {
    const double x = next_x();
    sum += x;
    const double mu = sum / static_cast<double>(n);
    log_lambda += mu * x - 0.5 * mu * mu;
    if (log_lambda >= b) return {n, false, log_lambda, log_lambda - b};
  }
  return {n_max, true, log_lambda, log_lambda - b};
}

/// log of int exp{y sum_x - n y^2 / 2} dN(s/t, v2(t))(y), the mixture
/// statistic matched to the NormalMean(s, t) estimator. Requires t > 0.
double normal_mixture_log_stat(std::int64_t n, double sum_x, double s, double t);

/// int nu(y) dN(s/t, v2(t))(y) by composite Gauss-Legendre quadrature.
double gamma_const_quadrature_normal(double s, double t);

}  // namespace srrs
