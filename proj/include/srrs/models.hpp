#pragma once

// Observation families, information numbers, and the analytic constants that
// describe the normal-mean power-one test.

#include <string>
#include <string_view>

namespace srrs {

enum class Family { GammaShape, NormalMean, Bernoulli };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/// Observation family plus its in-control parameter.
///
/// GammaShape: Gamma(theta, 1) with theta0 = baseline > 0.
/// NormalMean: N(mu, 1) with mu0 = baseline.
/// Bernoulli: Binomial(1, p) with p0 = baseline in (0, 1).
struct ModelSpec {
  Family family = Family::GammaShape;
  double baseline = 1.0;

  static ModelSpec gamma_shape(double theta0);
  static ModelSpec normal_mean(double mu0 = 0.0);
  static ModelSpec bernoulli(double p0);

  /// Throws std::invalid_argument if the baseline is outside the family's
  /// parameter space.
  void validate() const;

  /// True when x lies in the support (x > 0, finite real, x in {0, 1}).
  bool in_support(double x) const;

  /// True when `param` is a valid parameter of the family.
  bool valid_parameter(double param) const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// A single observation together with log x (Gamma family only; simulated
/// Gamma draws with tiny shape can have x == 0 in double while log x is
/// still exact).
struct Observation {
  double x = 0.0;
  double log_x = 0.0;
};

/// Validates support and precomputes log x. Throws std::domain_error.
Observation observe(const ModelSpec& model, double x);

/// log f_param(x) - log f_baseline(x). Throws std::domain_error for
/// out-of-support observations.
double log_likelihood_ratio(const ModelSpec& model, double param, double x);

/// Gamma shape log ratio with log x and log Gamma(theta0) supplied by the
/// caller; this is the form used in inner loops.
inline double gamma_log_ratio(double theta, double theta0, double log_x, double log_gamma_theta0,
                              double log_gamma_theta) {
  return (theta - theta0) * log_x + log_gamma_theta0 - log_gamma_theta;
}

struct InfoConstants {
  double fisher = 0.0;     // I(theta) = trigamma(theta)
  double kl = 0.0;         // I(theta, phi)
  double kappa_mom = 0.0;  // 1 / (theta I(theta))
  double kappa_mle = 1.0;
};

/// Kullback-Leibler number E_theta log[f_theta / f_phi] for Gamma(., 1).
double kl_gamma(double theta, double phi);

InfoConstants info_constants(double theta, double phi);

/// Renewal-theoretic overshoot correction for the normal random walk with
/// drift mu^2/2: 2 mu^-2 exp{-2 sum_n n^-1 Phi(-|mu| sqrt(n) / 2)}.
double nu_of_mu(double mu);

/// sum_{i>=1} 1/(i+t)^2 = trigamma(1 + t).
double v2(double t);

/// lim_n (sum_{i<=n} 1/(i+t) - log n) = -digamma(1 + t).
double r_const(double t);

/// Coefficients of the expected-sample-size gap between the estimated
/// likelihood ratio test and its Gaussian-mixture counterpart.
double ess_g(double t);
double ess_h(double t);

/// mu^-2 {g(t) + (mu - s/t)^2 h(t)}.
double ess_difference(double mu, double s, double t);

}  // namespace srrs
