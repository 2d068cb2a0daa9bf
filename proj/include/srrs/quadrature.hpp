#pragma once

#include <array>
#include <cmath>

namespace srrs {

// 20-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre20 {
  std::array<double, 20> nodes{};
  std::array<double, 20> weights{};

  GaussLegendre20() {
    constexpr int n = 20;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::fabs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  static const GaussLegendre20& instance() {
    static const GaussLegendre20 rule;
    return rule;
  }
};

/// Composite Gauss-Legendre integral of f over [a, b] with `pieces` panels.
template <class F>
double integrate(F&& f, double a, double b, int pieces = 16) {
  const auto& rule = GaussLegendre20::instance();
  const double width = (b - a) / pieces;
  double total = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    double panel = 0.0;
    for (int i = 0; i < 20; ++i) panel += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
    total += 0.5 * width * panel;
  }
  return total;
}

}  // namespace srrs
