#include "srrs/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "srrs/quadrature.hpp"
#include "srrs/special.hpp"

namespace srrs {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::GammaShape: return "gamma";
    case Family::NormalMean: return "normal";
    case Family::Bernoulli: return "bernoulli";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gamma") return Family::GammaShape;
  if (name == "normal") return Family::NormalMean;
  if (name == "bernoulli") return Family::Bernoulli;
  throw std::invalid_argument("unknown family '" + std::string(name) + "'");
}

ModelSpec ModelSpec::gamma_shape(double theta0) {
  ModelSpec m{Family::GammaShape, theta0};
  m.validate();
  return m;
}

ModelSpec ModelSpec::normal_mean(double mu0) {
  ModelSpec m{Family::NormalMean, mu0};
  m.validate();
  return m;
}

ModelSpec ModelSpec::bernoulli(double p0) {
  ModelSpec m{Family::Bernoulli, p0};
  m.validate();
  return m;
}

void ModelSpec::validate() const {
  if (!valid_parameter(baseline)) {
    throw std::invalid_argument("baseline " + std::to_string(baseline) + " invalid for family " +
                                std::string(to_string(family)));
  }
}

bool ModelSpec::in_support(double x) const {
  switch (family) {
    case Family::GammaShape: return x > 0.0 && std::isfinite(x);
    case Family::NormalMean: return std::isfinite(x);
    case Family::Bernoulli: return x == 0.0 || x == 1.0;
  }
  return false;
}

bool ModelSpec::valid_parameter(double param) const {
  switch (family) {
    case Family::GammaShape: return param > 0.0 && std::isfinite(param);
    case Family::NormalMean: return std::isfinite(param);
    case Family::Bernoulli: return param > 0.0 && param < 1.0;
  }
  return false;
}

Observation observe(const ModelSpec& model, double x) {
  if (!model.in_support(x)) {
    throw std::domain_error("observation " + std::to_string(x) + " outside the support of " +
                            std::string(to_string(model.family)));
  }
  return {x, model.family == Family::GammaShape ? std::log(x) : 0.0};
}

double log_likelihood_ratio(const ModelSpec& model, double param, double x) {
  if (!model.in_support(x)) {
    throw std::domain_error("observation " + std::to_string(x) + " outside the support of " +
                            std::string(to_string(model.family)));
  }
  switch (model.family) {
    case Family::GammaShape:
      return gamma_log_ratio(param, model.baseline, std::log(x), log_gamma(model.baseline),
                             log_gamma(param));
    case Family::NormalMean: {
      const double mu0 = model.baseline;
      return (param - mu0) * x - 0.5 * (param * param - mu0 * mu0);
    }
    case Family::Bernoulli: {
      const double p0 = model.baseline;
      return x == 1.0 ? std::log(param / p0) : std::log1p(-param) - std::log1p(-p0);
    }
  }
  return 0.0;
}

double kl_gamma(double theta, double phi) {
  if (!(theta > 0.0) || !(phi > 0.0)) throw std::domain_error("kl_gamma: parameters must be positive");
  if (theta == phi) return 0.0;
  return (theta - phi) * digamma(theta) - log_gamma(theta) + log_gamma(phi);
}

InfoConstants info_constants(double theta, double phi) {
  InfoConstants c;
  c.fisher = trigamma(theta);
  c.kl = kl_gamma(theta, phi);
  c.kappa_mom = 1.0 / (theta * c.fisher);
  c.kappa_mle = 1.0;
  return c;
}

namespace {

// int_a^inf Phi(-w) / w dw for a > 0.
double normal_tail_log_integral(double a) {
  constexpr double kFar = 40.0;  // Phi(-w) underflows well before this
  if (a >= kFar) return 0.0;
  auto tail = [](double w) { return normal_cdf(-w) / w; };
  if (a >= 1.0) {
    const int pieces = static_cast<int>(std::ceil((kFar - a) * 2.0));
    return integrate(tail, a, kFar, pieces);
  }
  // Split off the logarithmic singularity: Phi(-w) = 1/2 - (Phi(w) - 1/2).
  auto smooth = [](double w) { return w == 0.0 ? normal_pdf(0.0) : (normal_cdf(w) - 0.5) / w; };
  return -0.5 * std::log(a) - integrate(smooth, a, 1.0, 4) + integrate(tail, 1.0, kFar, 78);
}

}  // namespace

double nu_of_mu(double mu) {
  if (mu == 0.0 || !std::isfinite(mu)) throw std::domain_error("nu_of_mu: mu must be nonzero and finite");
  const double c = 0.5 * std::fabs(mu);
  constexpr long kDirectTerms = 20000;
  double sum = 0.0;
  long n = 1;
  for (; n <= kDirectTerms; ++n) {
    const double term = normal_cdf(-c * std::sqrt(static_cast<double>(n))) / n;
    sum += term;
    if (term < 1e-14 * sum + 1e-300) break;
  }
  if (n > kDirectTerms) n = kDirectTerms;
  // Remaining terms n+1, n+2, ... by the midpoint integral over [n + 1/2, inf);
  // substituting w = c sqrt(u) gives 2 int Phi(-w)/w dw.
  sum += 2.0 * normal_tail_log_integral(c * std::sqrt(n + 0.5));
  return 2.0 / (mu * mu) * std::exp(-2.0 * sum);
}

double v2(double t) {
  if (!(t >= 0.0)) throw std::domain_error("v2: t must be nonnegative");
  return trigamma(1.0 + t);
}

double r_const(double t) {
  if (!(t >= 0.0)) throw std::domain_error("r_const: t must be nonnegative");
  return -digamma(1.0 + t);
}

double ess_g(double t) {
  const double v = v2(t);
  return r_const(t) - t * v - 2.0 * std::log(v) + 1.0;
}

double ess_h(double t) {
  const double v = v2(t);
  return 1.0 + t * t * v - 1.0 / v;
}

double ess_difference(double mu, double s, double t) {
  if (!(t > 0.0)) throw std::domain_error("ess_difference: t must be positive");
  if (mu == 0.0) throw std::domain_error("ess_difference: mu must be nonzero");
  const double offset = mu - s / t;
  return (ess_g(t) + offset * offset * ess_h(t)) / (mu * mu);
}

}  // namespace srrs
