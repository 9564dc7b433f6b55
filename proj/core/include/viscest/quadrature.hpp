#pragma once

#include <vector>

namespace viscest {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on (-1, 1), nodes ascending. Exact for
/// polynomials of degree <= 2n - 1.
QuadratureRule gauss_legendre(int n);

/// Legendre polynomials P_0..P_{n-1} with first and second derivatives at x.
struct LegendreTable {
  std::vector<double> p;
  std::vector<double> dp;
  std::vector<double> d2p;
};

void legendre_table(int n, double x, LegendreTable& out);

}  // namespace viscest
