#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "viscest/errors.hpp"
#include "viscest/statistics.hpp"

using namespace viscest;
using viscest::testing::small_model;

namespace {

// Ensemble whose estimator error at time t is z_r(t) / sqrt(t).
EnsembleSummary synthetic_ensemble(const std::vector<double>& times, int runs, double nu, bool fresh_draws,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  EnsembleSummary s;
  s.times = times;
  for (int r = 0; r < runs; ++r) {
    RunSummary run;
    double z = normal(rng);
    for (double t : times) {
      if (fresh_draws) z = normal(rng);
      CheckpointStats c;
      c.t = t;
      c.nu_hat = nu + z / std::sqrt(t);
      run.checkpoints.push_back(c);
    }
    run.final = run.checkpoints.back();
    s.runs.push_back(run);
  }
  return s;
}

Trajectory linear_qv_trajectory(double rate, int horizon) {
  Trajectory run;
  for (int i = 0; i <= 4 * horizon; ++i) {
    TrajectorySample s;
    s.t = 0.25 * i;
    s.trace.t = s.t;
    s.trace.quadratic_variation = rate * s.t;
    s.obs.energy = 0.01 * s.t;
    run.samples.push_back(s);
  }
  return run;
}

}  // namespace

TEST(Consistency, RecoversSlopeOfSyntheticRootTDecay) {
  const std::vector<double> times{1, 3, 10, 30, 100, 300, 1000};
  const auto exact = consistency_rate(synthetic_ensemble(times, 101, 0.5, false, 1), 0.5, 0.0);
  EXPECT_NEAR(exact.slope, -0.5, 1e-12);
  EXPECT_NEAR(std::exp(exact.intercept), median([&] {
                std::vector<double> z;
                for (const auto& r : synthetic_ensemble(times, 101, 0.5, false, 1).runs)
                  z.push_back(std::abs(r.checkpoints[0].nu_hat - 0.5));
                return z;
              }()),
              1e-12);
  const auto noisy = consistency_rate(synthetic_ensemble(times, 400, 0.5, true, 2), 0.5);
  EXPECT_NEAR(noisy.slope, -0.5, 0.1);
  EXPECT_EQ(std::count(noisy.used.begin(), noisy.used.end(), false), 1);
}

TEST(Consistency, FlatErrorGivesZeroSlopeAndZeroMediansAreDropped) {
  const std::vector<double> times{1, 10, 100, 1000};
  EnsembleSummary s = synthetic_ensemble(times, 11, 1.0, false, 3);
  for (auto& r : s.runs)
    for (auto& c : r.checkpoints) c.nu_hat = 1.0 + 0.25 * (c.nu_hat > 1.0 ? 1 : -1);
  EXPECT_NEAR(consistency_rate(s, 1.0, 0.0).slope, 0.0, 1e-12);

  for (auto& r : s.runs) r.checkpoints[3].nu_hat = 1.0;
  const auto fit = consistency_rate(s, 1.0, 0.0);
  EXPECT_EQ(fit.dropped_zero_medians, 1);
  EXPECT_FALSE(fit.used[3]);
}

TEST(Consistency, RequiresDecadeAndFourCheckpoints) {
  EXPECT_THROW(consistency_rate(synthetic_ensemble({1, 2, 3}, 5, 1, false, 1), 1.0), InsufficientDataError);
  EXPECT_THROW(consistency_rate(synthetic_ensemble({1, 2, 3, 9}, 5, 1, false, 1), 1.0), InsufficientDataError);
}

TEST(Ks, ZeroSampleAndKnownGaps) {
  const std::vector<double> zeros(50, 0.0);
  EXPECT_DOUBLE_EQ(ks_distance(zeros, 1.0), 0.5);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  std::vector<double> x(10000);
  for (auto& v : x) v = normal(rng);
  // DKW: P(D > 0.03) <= 2 exp(-2 n 0.03^2) ~ 3e-8.
  EXPECT_LT(ks_distance(x, 1.0), 0.03);
  // N(0, 4) against N(0, 1): population distance is about 0.17.
  std::vector<double> wide(x);
  for (auto& v : wide) v *= 2.0;
  EXPECT_GT(ks_distance(wide, 1.0), 0.1);
  EXPECT_NEAR(ks_distance(wide, 2.0), ks_distance(x, 1.0), 1e-12);
}

TEST(Ks, NormalCdf) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0, 3.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0, 1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(normal_cdf(-2.0, 2.0), 0.15865525393145707, 1e-15);
}

TEST(SigmaNu, FromSigmaM) {
  EXPECT_DOUBLE_EQ(sigma_nu_from_sigma_m(1.0, 0.5, 2.0), 0.5);
  // Single Dirichlet mode, b = 1, nu = 1/2, alpha = pi^2/4: sigma_M^2 = b^4/(2 nu alpha),
  // so sigma_nu = sqrt(2 nu / alpha) = 2/pi.
  const double alpha = std::numbers::pi * std::numbers::pi / 4.0;
  const double sigma_m = std::sqrt(1.0 / (2.0 * 0.5 * alpha));
  EXPECT_NEAR(sigma_nu_from_sigma_m(sigma_m, 0.5, 1.0), 0.6366197723675814, 1e-15);
  EXPECT_THROW(sigma_nu_from_sigma_m(0.0, 0.5, 1.0), DimensionError);
}

TEST(DeltaMethod, IdentitiesAndTaylor) {
  const std::vector<double> at_a{2.0, 2.0};
  for (double v : delta_method_transform(at_a, 2.0, 3.0, 4.0)) EXPECT_EQ(v, 0.0);
  const std::vector<double> eta{1.0, 4.0};
  const auto out = delta_method_transform(eta, 2.0, 1.0, 9.0);
  EXPECT_DOUBLE_EQ(out[0], 3.0 * 0.5);
  EXPECT_DOUBLE_EQ(out[1], 3.0 * -0.25);
  // First order: c sqrt(t) (1/eta - 1/a) ~ -c sqrt(t) (eta - a) / a^2.
  const double h = 1e-6;
  const std::vector<double> near{2.0 + h};
  EXPECT_NEAR(delta_method_transform(near, 2.0, 1.0, 1.0)[0] / (-h / 4.0), 1.0, 1e-5);
  EXPECT_THROW(delta_method_transform(eta, 2.0, 1.0, 0.5), DimensionError);
}

TEST(DeltaMethod, ReportsEveryZeroIndex) {
  const std::vector<double> eta{1.0, 0.0, 3.0, 0.0};
  try {
    delta_method_transform(eta, 1.0, 1.0, 1.0);
    FAIL() << "expected ReciprocalError";
  } catch (const ReciprocalError& e) {
    EXPECT_EQ(e.indices(), (std::vector<std::size_t>{1, 3}));
  }
}

TEST(QuadraticVariation, SigmaAndLawOfLargeNumbersReadIntegerTimes) {
  const auto run = linear_qv_trajectory(2.5, 200);
  EXPECT_NEAR(estimate_sigma_m_squared(run, 0.2, 100.0), 2.5, 1e-12);
  EXPECT_THROW(estimate_sigma_m_squared(run, 0.2, 500.0), InsufficientDataError);
  const auto lln = quadratic_variation_lln(run, 200);
  ASSERT_EQ(lln.size(), 200u);
  for (double v : lln) EXPECT_NEAR(v, 2.5, 1e-12);
  EXPECT_THROW(quadratic_variation_lln(run, 201), InsufficientDataError);
}

TEST(Supermartingale, GammaAndMonotoneExceedance) {
  const NoiseSpec spec({1.0, 2.0});
  EXPECT_DOUBLE_EQ(supermartingale_gamma(8.0, spec), 0.5);
  EnsembleSummary s;
  s.times = {1.0};
  for (int i = 0; i < 10; ++i) {
    RunSummary r;
    r.final.sup_excess = i;
    s.runs.push_back(r);
  }
  const std::vector<double> rho{0.5, 2.0, 4.0, 9.0};
  const auto pts = supermartingale_exceedance(s, rho, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(pts[0].empirical, 0.9);
  EXPECT_DOUBLE_EQ(pts[1].empirical, 0.7);
  EXPECT_DOUBLE_EQ(pts[3].empirical, 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LE(pts[i].empirical, pts[i - 1].empirical);
    EXPECT_LT(pts[i].bound, pts[i - 1].bound);
  }
  EXPECT_DOUBLE_EQ(pts[1].bound, std::exp(-1.0));
  EXPECT_NEAR(pts[0].std_error, std::sqrt(0.09 / 10.0), 1e-15);
}

TEST(Moments, BrownianSupMomentScalesLinearly) {
  // E sup_{s<=t} |W_s|^2 = c t for Brownian motion.
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  const std::vector<double> times{1, 2, 4, 8, 16};
  EnsembleSummary s;
  s.times = times;
  const double dt = 0.01;
  for (int r = 0; r < 2000; ++r) {
    RunSummary run;
    double w = 0.0, sup = 0.0;
    std::size_t next = 0;
    run.unit_martingale.push_back(0.0);
    for (int i = 1; i <= 1600; ++i) {
      w += std::sqrt(dt) * normal(rng);
      sup = std::max(sup, std::abs(w));
      if (i % 100 == 0) run.unit_martingale.push_back(w);
      if (next < times.size() && i == static_cast<int>(times[next] / dt + 0.5)) {
        CheckpointStats c;
        c.t = times[next++];
        c.sup_abs_martingale = sup;
        run.checkpoints.push_back(c);
      }
    }
    s.runs.push_back(run);
  }
  const auto m = moment_scaling(s, 1, times, 1.0);
  EXPECT_FALSE(m.zero);
  EXPECT_NEAR(m.exponent, 1.0, 0.15);
  EXPECT_DOUBLE_EQ(m.theta, 0.1);
  ASSERT_EQ(m.increment_exp_moments.size(), 16u);
  EXPECT_LT(m.increment_spread, 1.1);
  const auto m2 = moment_scaling(s, 2, times, 1.0);
  EXPECT_NEAR(m2.exponent, 2.0, 0.2);
}

TEST(Moments, ZeroFlagWhenMartingaleVanishes) {
  EnsembleSummary s;
  s.times = {1, 2, 3, 4};
  RunSummary r;
  r.checkpoints.resize(4);
  s.runs.push_back(r);
  const auto m = moment_scaling(s, 1, s.times, 1.0);
  EXPECT_TRUE(m.zero);
  EXPECT_TRUE(std::isnan(m.exponent));
}

TEST(ExponentialMoments, ClosedFormAndGuard) {
  const auto run = linear_qv_trajectory(1.0, 10);
  const auto curve = exponential_moment_curve(run, 2.0);
  ASSERT_EQ(curve.size(), run.samples.size());
  EXPECT_EQ(curve.front().value, 1.0);
  for (std::size_t i = 0; i < curve.size(); ++i) EXPECT_DOUBLE_EQ(curve[i].value, std::exp(2.0 * 0.01 * run.samples[i].t));
  EXPECT_THROW(exponential_moment_curve(run, 600.0), DimensionError);
}

TEST(Helpers, OrderedMeanIsPermutationInvariant) {
  std::vector<double> v{1e16, 1.0, -1e16, 3.0, 0.5, 2.25};
  const double m = ordered_mean(v);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(ordered_mean(v), m);
  }
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  const std::vector<double> x{1, 2, 3}, y{3, 5, 7};
  const auto [slope, intercept] = fit_line(x, y);
  EXPECT_NEAR(slope, 2.0, 1e-14);
  EXPECT_NEAR(intercept, 1.0, 1e-14);
  EXPECT_NEAR(sample_std(std::vector<double>{1, 2, 3, 4}), std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(Ensemble, SingleRunMatchesSimulate) {
  const auto& model = small_model();
  SimConfig c;
  c.nu = 0.5;
  c.dt = 0.01;
  c.horizon = 2.0;
  const NoiseSpec spec(std::vector<double>(static_cast<std::size_t>(model.size()), 0.7));
  EnsembleOptions opt;
  opt.checkpoint_times = {0.5, 1.0, 2.0};
  const auto e = run_ensemble(model, c, spec, 1, 99, opt);
  RandomStream stream{99, 0, 0};
  const auto u0 = initial_state(model, c, spec, stream);
  const auto traj = simulate(model, u0, c, spec, stream);
  EXPECT_EQ(e.runs[0].final.nu_hat, nu_hat(traj.trace));
  EXPECT_EQ(e.runs[0].final.martingale, traj.trace.martingale);
  EXPECT_EQ(e.runs[0].checkpoints[1].xi, xi(traj.samples[100].trace));
  EXPECT_EQ(e.runs[0].unit_martingale.size(), 3u);
  EXPECT_EQ(e.runs[0].unit_martingale[2], traj.trace.martingale);
}

TEST(Ensemble, ThreadCountDoesNotChangeResults) {
  const auto& model = small_model();
  SimConfig c;
  c.nu = 0.5;
  c.dt = 0.01;
  c.horizon = 1.0;
  const NoiseSpec spec(std::vector<double>(static_cast<std::size_t>(model.size()), 0.7));
  EnsembleOptions opt;
  opt.checkpoint_times = {0.5, 1.0};
  opt.threads = 1;
  const auto a = run_ensemble(model, c, spec, 7, 5, opt);
  opt.threads = 3;
  const auto b = run_ensemble(model, c, spec, 7, 5, opt);
  for (int r = 0; r < 7; ++r) {
    EXPECT_EQ(a.runs[r].final.nu_hat, b.runs[r].final.nu_hat);
    EXPECT_EQ(a.runs[r].checkpoints[0].sup_excess, b.runs[r].checkpoints[0].sup_excess);
  }
  EXPECT_EQ(ordered_mean(a.column(1.0, &CheckpointStats::xi)), ordered_mean(b.column(1.0, &CheckpointStats::xi)));
}

TEST(Ensemble, RejectsOffGridCheckpoints) {
  const auto& model = small_model();
  SimConfig c;
  c.dt = 0.1;
  c.horizon = 1.0;
  const NoiseSpec spec(std::vector<double>(static_cast<std::size_t>(model.size()), 0.7));
  EnsembleOptions opt;
  opt.checkpoint_times = {0.25};
  EXPECT_THROW(run_ensemble(model, c, spec, 2, 1, opt), DimensionError);
  opt.checkpoint_times = {2.0};
  EXPECT_THROW(run_ensemble(model, c, spec, 2, 1, opt), DimensionError);
}

TEST(Ensemble, LinearEnstrophyAverageMatchesStationaryMean) {
  // Linear scheme u <- E (u + dz): stationary E u_j^2 = E_j^2 b^2 dt / (1 - E_j^2).
  const auto& model = small_model();
  SimConfig c;
  c.nu = 0.5;
  c.dt = 1e-3;
  c.horizon = 40.0;
  c.linear_only = true;
  c.initial.kind = InitialCondition::Kind::warm;
  c.initial.warmup = 10.0;
  const NoiseSpec spec(std::vector<double>(static_cast<std::size_t>(model.size()), 1.0));
  EnsembleOptions opt;
  opt.checkpoint_times = {40.0};
  const auto e = run_ensemble(model, c, spec, 64, 2024, opt);
  const auto x = e.column(40.0, &CheckpointStats::xi);
  double scheme = 0.0;
  for (double a : model.alphas()) {
    const double E = std::exp(-c.nu * a * c.dt);
    scheme += a * E * E * c.dt / (1.0 - E * E);
  }
  const double mean = ordered_mean(x);
  const double se = sample_std(x) / std::sqrt(static_cast<double>(x.size()));
  EXPECT_NEAR(mean, scheme, 3.0 * se);
  // Continuous limit B / (2 nu), up to the O(dt) scheme bias.
  EXPECT_NEAR(mean / (spec.total() / (2.0 * c.nu)), 1.0, 0.05);
}
