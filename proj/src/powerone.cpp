#include "srrs/powerone.hpp"

#include <cmath>
#include <stdexcept>

#include "srrs/quadrature.hpp"
#include "srrs/special.hpp"

namespace srrs {

double normal_mixture_log_stat(std::int64_t n, double sum_x, double s, double t) {
  if (!(t > 0.0)) throw std::domain_error("normal_mixture_log_stat: t must be positive");
  const double var = v2(t);
  const double mean = s / t;
  const double spread = 1.0 + static_cast<double>(n) * var;
  const double shifted = sum_x * var + mean;
  return -0.5 * std::log(spread) + shifted * shifted / (2.0 * var * spread) -
         mean * mean / (2.0 * var);
}

double gamma_const_quadrature_normal(double s, double t) {
  if (!(t > 0.0)) throw std::domain_error("gamma_const_quadrature_normal: t must be positive");
  const double mean = s / t;
  const double sd = std::sqrt(v2(t));
  auto integrand = [&](double y) { return nu_of_mu(y) * normal_pdf((y - mean) / sd) / sd; };
  constexpr double kWidth = 12.0;
  const double lo = mean - kWidth * sd;
  const double hi = mean + kWidth * sd;
  // nu(|y|) has a kink at 0; keep it on a panel boundary.
  if (lo < 0.0 && hi > 0.0) {
    auto panels = [&](double len) { return std::max(4, static_cast<int>(std::ceil(len / sd * 4.0))); };
    return integrate(integrand, lo, 0.0, panels(-lo)) + integrate(integrand, 0.0, hi, panels(hi));
  }
  return integrate(integrand, lo, hi, 96);
}

}  // namespace srrs
