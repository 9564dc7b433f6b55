#include "viscest/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace viscest {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      auto [p, d] = legendre_with_derivative(n, x);
      const double dx = p / d;
      x -= dx;
      dp = d;
      if (std::abs(dx) < 1e-16) break;
    }
    dp = legendre_with_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

void legendre_table(int n, double x, LegendreTable& out) {
  out.p.assign(n, 0.0);
  out.dp.assign(n, 0.0);
  out.d2p.assign(n, 0.0);
  if (n == 0) return;
  out.p[0] = 1.0;
  if (n == 1) return;
  out.p[1] = x;
  out.dp[1] = 1.0;
  for (int k = 1; k + 1 < n; ++k) {
    out.p[k + 1] = ((2.0 * k + 1.0) * x * out.p[k] - k * out.p[k - 1]) / (k + 1.0);
    // P'_{k+1} = P'_{k-1} + (2k+1) P_k, same for the next derivative.
    out.dp[k + 1] = out.dp[k - 1] + (2.0 * k + 1.0) * out.p[k];
    out.d2p[k + 1] = out.d2p[k - 1] + (2.0 * k + 1.0) * out.dp[k];
  }
}

}  // namespace viscest
