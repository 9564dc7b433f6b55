#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "viscest/dynamics.hpp"
#include "viscest/noise.hpp"

namespace viscest {

/// Estimator functionals of one run at one checkpoint time.
struct CheckpointStats {
  double t = 0.0;
  double nu_hat = 0.0;  // NaN when Q_t = 0
  double xi = 0.0;
  double martingale = 0.0;
  double energy = 0.0;
  double sup_excess = 0.0;          // sup_{s<=t} (|u(s)|^2 - |u_0|^2 - B s)
  double sup_abs_martingale = 0.0;  // sup_{s<=t} |M_s|
  double quadratic_variation = 0.0;
};

struct RunSummary {
  bool failed = false;
  std::string failure;
  double initial_energy = 0.0;
  std::vector<CheckpointStats> checkpoints;  // aligned with EnsembleSummary::times
  CheckpointStats final;                     // at the horizon T
  std::vector<double> unit_martingale;       // M_k at t = 0, 1, 2, ... (empty if 1/dt is not an integer)
};

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<RunSummary> runs;
  std::string config_hash;

  int run_count() const { return static_cast<int>(runs.size()); }
  int failed_runs() const;
  /// Index of checkpoint time t; throws DimensionError if absent.
  std::size_t checkpoint_index(double t) const;
  /// Values of a field at checkpoint t over completed runs.
  std::vector<double> column(double t, double CheckpointStats::*field) const;
};

struct EnsembleOptions {
  std::vector<double> checkpoint_times;
  int threads = 0;  // 0: hardware concurrency
  std::string config_hash;
  double max_failure_fraction = 0.05;
};

/// R independent trajectories on streams 0..R-1 of `seed`. The result does not
/// depend on thread count or scheduling. Diverged runs are recorded as
/// failures; more than `max_failure_fraction` of them raises DivergenceError.
EnsembleSummary run_ensemble(const GalerkinModel& model, const SimConfig& config, const NoiseSpec& spec, int runs,
                             std::uint64_t seed, const EnsembleOptions& options);

/// Least-squares fit of log median|nu_hat_t - nu| against log t.
struct ConsistencyFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> times;
  std::vector<double> median_abs_error;
  std::vector<bool> used;  // false: burn-in or zero median
  int dropped_zero_medians = 0;
};

ConsistencyFit consistency_rate(const EnsembleSummary& summary, double nu, double burn_in_fraction = 0.2);

/// Ergodic average of sum_j b_j^2 u_j^2 over [burn-in, T] of one long run.
double estimate_sigma_m_squared(const Trajectory& run, double burn_in_fraction = 0.2, double min_length = 100.0);

/// sigma_nu = 2 nu sigma_M / B: the scale of sqrt(t)(xi_t - B/2nu) is sigma_M/nu,
/// pushed through x -> B/(2x) at x = B/(2nu).
double sigma_nu_from_sigma_m(double sigma_m, double nu, double noise_total);

/// Centred normal CDF with standard deviation sigma.
double normal_cdf(double z, double sigma);

/// sup_z |F_emp(z) - Phi_sigma(z)|, both one-sided gaps at every sample.
double ks_distance(std::span<const double> samples, double sigma);

/// n^{-1} <M>_n for n = 1..count, read from samples at integer times.
std::vector<double> quadratic_variation_lln(const Trajectory& run, int count);

/// gamma = alpha_1 / (4 max_j b_j^2).
double supermartingale_gamma(double alpha1, const NoiseSpec& spec);

struct ExceedancePoint {
  double rho = 0.0;
  double empirical = 0.0;
  double bound = 0.0;  // exp(-gamma nu rho)
  double std_error = 0.0;
};

/// Empirical P{sup_{s<=T}(|u(s)|^2 - |u_0|^2 - B s) > rho} against exp(-gamma nu rho).
std::vector<ExceedancePoint> supermartingale_exceedance(const EnsembleSummary& summary, std::span<const double> rho,
                                                        double gamma, double nu);

struct MomentScaling {
  int p = 1;
  bool zero = false;  // all moments vanish; no fit
  double exponent = 0.0;
  double intercept = 0.0;
  std::vector<double> times;
  std::vector<double> moments;  // E sup_{s<=t} |M_s|^{2p}
  double theta = 0.0;           // 0.1 / sigma_M
  std::vector<double> increment_exp_moments;  // mean exp(theta |M_k - M_{k-1}|), k = 1, 2, ...
  double increment_spread = 0.0;              // max / min of the above
};

MomentScaling moment_scaling(const EnsembleSummary& summary, int p, std::span<const double> times, double sigma_m);

/// c sqrt(t) (eta^{-1} - a^{-1}) elementwise; throws ReciprocalError listing zero samples.
std::vector<double> delta_method_transform(std::span<const double> eta, double a, double c, double t);

struct CurvePoint {
  double t = 0.0;
  double value = 0.0;
};

/// Mean of exp(kappa_nu |u(t)|^2) over runs, at t = 0 and every checkpoint.
std::vector<CurvePoint> exponential_moment_curve(const EnsembleSummary& summary, double kappa_nu);
std::vector<CurvePoint> exponential_moment_curve(const Trajectory& run, double kappa_nu);

/// Largest admissible kappa_nu |u|^2 before the exponential is refused.
inline constexpr double kExponentGuard = 50.0;

struct NormalityReport {
  double sigma_m = 0.0;
  double sigma_nu = 0.0;
  double ks = 0.0;
  std::size_t samples = 0;
  double t = 0.0;
};

/// sqrt(t)(nu_hat_t - nu) over completed runs at checkpoint t.
std::vector<double> scaled_estimator_errors(const EnsembleSummary& summary, double t, double nu);

NormalityReport normality_report(std::span<const double> scaled_errors, double sigma_m, double sigma_nu, double t);

/// Sample standard deviation (n - 1 denominator).
double sample_std(std::span<const double> values);

/// Summation in sorted order, so the result is invariant under permutation.
double ordered_mean(std::vector<double> values);
double median(std::vector<double> values);

/// Ordinary least squares y = slope * x + intercept.
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace viscest
