#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "viscest/errors.hpp"
#include "viscest/stokes_basis.hpp"

using namespace viscest;
using viscest::testing::small_basis;

namespace {

constexpr double kPi = std::numbers::pi;

// Clamped Stokes eigenvalues for wavenumber kappa from the characteristic
// equations of (D^2 - k^2)(D^2 - k^2 + alpha) phi = 0 with phi = phi' = 0 at +-1.
// alpha = kappa^2 + mu^2 where mu solves
//   even: mu sin(mu) cosh(k) + k sinh(k) cos(mu) = 0
//   odd:  mu cos(mu) sinh(k) - k cosh(k) sin(mu) = 0
std::vector<double> clamped_spectrum_oracle(double kappa, int count) {
  auto even = [&](double mu) { return mu * std::sin(mu) * std::cosh(kappa) + kappa * std::sinh(kappa) * std::cos(mu); };
  auto odd = [&](double mu) { return mu * std::cos(mu) * std::sinh(kappa) - kappa * std::cosh(kappa) * std::sin(mu); };
  std::vector<double> alphas;
  const double h = 1e-3;
  for (int branch = 0; branch < 2; ++branch) {
    const std::function<double(double)> g = branch == 0 ? std::function<double(double)>(even) : odd;
    for (double mu = 1e-2; mu < 40.0; mu += h) {
      if ((g(mu) < 0.0) != (g(mu + h) < 0.0)) {
        const double root = viscest::testing::bisect(g, mu, mu + h);
        alphas.push_back(kappa * kappa + root * root);
      }
    }
  }
  std::sort(alphas.begin(), alphas.end());
  alphas.resize(static_cast<std::size_t>(count));
  return alphas;
}

ChannelGeometry geometry(int K, int M, int J) {
  ChannelGeometry g;
  g.max_wavenumber = K;
  g.wall_order = M;
  g.modes = J;
  return g;
}

}  // namespace

TEST(WallEigenproblem, DirichletSpectrumForZeroWavenumber) {
  const auto pairs = solve_wall_eigenproblem(0, geometry(0, 32, 8), 8);
  for (int n = 1; n <= 8; ++n) {
    const double exact = std::pow(n * kPi / 2.0, 2);
    EXPECT_NEAR(pairs[n - 1].alpha / exact, 1.0, 1e-8) << "n=" << n;
  }
}

TEST(WallEigenproblem, ZeroWavenumberProfilesAreCosAndSin) {
  const auto pairs = solve_wall_eigenproblem(0, geometry(0, 32, 2), 2);
  // Compare shapes up to sign and scale at a few points.
  const auto shape = [&](int i, double x) { return evaluate_profile(0, pairs[i].profile, x).value; };
  const double s0 = shape(0, 0.0);
  const double s1 = shape(1, 0.5);
  for (double x : {-0.8, -0.3, 0.1, 0.6}) {
    EXPECT_NEAR(shape(0, x) / s0, std::cos(kPi * x / 2.0), 1e-10);
    EXPECT_NEAR(shape(1, x) / s1, std::sin(kPi * x), 1e-10);
  }
  EXPECT_NEAR(shape(0, 1.0), 0.0, 1e-13);
  EXPECT_NEAR(shape(0, -1.0), 0.0, 1e-13);
}

TEST(WallEigenproblem, ClampedSpectrumMatchesCharacteristicEquation) {
  const ChannelGeometry g = geometry(3, 40, 8);
  for (int k = 1; k <= 3; ++k) {
    const auto pairs = solve_wall_eigenproblem(k, g, 6);
    const auto oracle = clamped_spectrum_oracle(g.wavenumber(k), 6);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(pairs[i].alpha / oracle[i], 1.0, 1e-9) << "k=" << k << " i=" << i;
  }
}

TEST(WallEigenproblem, ClampedProfilesSatisfyWallConditions) {
  const auto pairs = solve_wall_eigenproblem(2, geometry(2, 32, 4), 4);
  for (const auto& p : pairs) {
    for (double x : {-1.0, 1.0}) {
      const auto v = evaluate_profile(2, p.profile, x);
      EXPECT_NEAR(v.value, 0.0, 1e-12);
      EXPECT_NEAR(v.d1, 0.0, 1e-12);
    }
  }
}

TEST(WallEigenproblem, RefinementStableAtDoubledResolution) {
  const auto a = solve_wall_eigenproblem(1, geometry(1, 32, 1), 1);
  const auto b = solve_wall_eigenproblem(1, geometry(1, 64, 1), 1);
  EXPECT_NEAR(a[0].alpha / b[0].alpha, 1.0, 1e-10);
}

TEST(WallEigenproblem, CapacityAndResolutionErrors) {
  EXPECT_THROW(solve_wall_eigenproblem(0, geometry(0, 8, 1), 9), CapacityError);
  // Eight coefficients cannot resolve eight Dirichlet modes to 1e-10.
  EXPECT_THROW(solve_wall_eigenproblem(0, geometry(0, 8, 1), 8), ResolutionError);
  EXPECT_THROW(solve_wall_eigenproblem(5, geometry(2, 16, 1), 1), DimensionError);
}

TEST(ChannelGeometry, ValidationReportsEveryProblem) {
  ChannelGeometry g = geometry(2, 4, 0);
  g.period = -1.0;
  try {
    g.validate();
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("period"), std::string::npos) << what;
    EXPECT_NE(what.find("wall resolution M"), std::string::npos) << what;
    EXPECT_NE(what.find("basis size J"), std::string::npos) << what;
  }
  ChannelGeometry coarse = geometry(2, 16, 4);
  coarse.grid_x2 = 10;
  coarse.grid_x1 = 12;
  EXPECT_THROW(coarse.validate(), DimensionError);
}

TEST(AssembleBasis, ZeroWavenumberOnly) {
  const StokesBasis b = assemble_basis(geometry(0, 32, 4));
  for (int j = 0; j < 4; ++j) {
    EXPECT_EQ(b.mode(j).k, 0);
    EXPECT_NEAR(b.alphas()[j] / std::pow((j + 1) * kPi / 2.0, 2), 1.0, 1e-10);
  }
}

TEST(AssembleBasis, SortedWithDeterministicTieBreak) {
  const auto& b = small_basis();
  for (int j = 1; j < b.size(); ++j) {
    const auto& l = b.mode(j - 1);
    const auto& r = b.mode(j);
    EXPECT_TRUE(std::tie(l.alpha, l.k, l.parity) < std::tie(r.alpha, r.k, r.parity));
  }
  // The k = 1 pair: both parities carry the same eigenvalue.
  EXPECT_EQ(b.mode(1).k, 1);
  EXPECT_EQ(b.mode(1).parity, 0);
  EXPECT_EQ(b.mode(2).parity, 1);
  EXPECT_EQ(b.alphas()[1], b.alphas()[2]);
}

TEST(AssembleBasis, GramMatrixIsIdentity) {
  const Eigen::MatrixXd g = gram_matrix(small_basis());
  EXPECT_LE((g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AssembleBasis, EigenrelationGradientNormEqualsAlpha) {
  const auto& b = small_basis();
  std::vector<double> e(static_cast<std::size_t>(b.size()));
  for (int j = 0; j < b.size(); ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    const GridField f = pointwise_field(b, e);
    EXPECT_NEAR(gradient_inner(b, f, f) / b.alphas()[j], 1.0, 1e-9) << "j=" << j;
  }
}

TEST(AssembleBasis, ModesAreDivergenceFreeAndVanishOnWalls) {
  const auto& b = small_basis();
  std::vector<double> e(static_cast<std::size_t>(b.size()));
  for (int j = 0; j < b.size(); ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[static_cast<std::size_t>(j)] = 1.0;
    EXPECT_LE(scaled_divergence(b, pointwise_field(b, e)), 1e-8);
    for (double x1 : {0.0, 1.3, 4.0}) {
      for (double x2 : {-1.0, 1.0}) {
        const auto [u1, u2] = b.velocity(j, x1, x2);
        EXPECT_NEAR(u1, 0.0, 1e-12);
        EXPECT_NEAR(u2, 0.0, 1e-12);
      }
    }
  }
}

TEST(AssembleBasis, RejectsTooManyModes) {
  EXPECT_THROW(assemble_basis(geometry(0, 16, 40)), CapacityError);
}

TEST(PointwiseField, LinearAndParsevalConsistent) {
  const auto& b = small_basis();
  const auto n = static_cast<std::size_t>(b.size());
  const GridField zero = pointwise_field(b, std::vector<double>(n, 0.0));
  EXPECT_EQ(zero.u1.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(zero.d2u2.cwiseAbs().maxCoeff(), 0.0);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> c(n);
    double sum = 0.0;
    for (auto& x : c) {
      x = normal(rng);
      sum += x * x;
    }
    const GridField f = pointwise_field(b, c);
    EXPECT_NEAR(l2_inner(b, f, f), sum, 1e-8 * sum);
    EXPECT_LE(scaled_divergence(b, f), 1e-8);
  }
  EXPECT_THROW(pointwise_field(b, std::vector<double>(n + 1, 0.0)), DimensionError);
}

TEST(PointwiseField, UnitCoefficientReproducesMode) {
  const auto& b = small_basis();
  std::vector<double> e(static_cast<std::size_t>(b.size()), 0.0);
  e[3] = 1.0;
  const GridField f = pointwise_field(b, e);
  EXPECT_EQ((f.u1 - b.u1().col(3)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((f.d2u2 - b.d2u2().col(3)).cwiseAbs().maxCoeff(), 0.0);
}
