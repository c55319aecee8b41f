#pragma once

#include <cmath>
#include <vector>

#include "nmodes/types.hpp"

namespace nmodes {

/// Gauss-Legendre rule on [-1, 1]. Exact for polynomials of degree 2n-1.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) {
    if (n < 1) throw DomainError("GaussLegendre: need n >= 1 points");
    nodes.resize(n);
    weights.resize(n);
    // Newton on P_n from the Chebyshev-like initial guess; converges in a
    // handful of iterations to machine precision.
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      nodes[n - 1 - i] = x;
      weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  /// Integrate f over [a, b].
  template <typename F>
  double integrate(double a, double b, F&& f) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      sum += weights[i] * f(mid + half * nodes[i]);
    return half * sum;
  }

  /// Node/weight pairs mapped to [a, b].
  void mapped(double a, double b, std::vector<double>& xs, std::vector<double>& ws) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    xs.resize(nodes.size());
    ws.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      xs[i] = mid + half * nodes[i];
      ws[i] = half * weights[i];
    }
  }
};

}  // namespace nmodes
