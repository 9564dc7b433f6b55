#include "viscest/statistics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "viscest/errors.hpp"

namespace viscest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

CheckpointStats stats_from_trace(const EstimatorTrace& trace) {
  CheckpointStats s;
  s.t = trace.t;
  s.xi = trace.t > 0.0 ? trace.enstrophy_integral / trace.t : kNaN;
  s.nu_hat = trace.enstrophy_integral > 0.0 && trace.t > 0.0 ? nu_hat(trace) : kNaN;
  s.martingale = trace.martingale;
  s.energy = trace.energy;
  s.sup_excess = trace.sup_excess;
  s.sup_abs_martingale = trace.sup_abs_martingale;
  s.quadratic_variation = trace.quadratic_variation;
  return s;
}

// Map each checkpoint time to its step index; throws unless on the step grid.
std::vector<std::int64_t> checkpoint_steps(const SimConfig& config, std::span<const double> times) {
  const double dt = config.effective_dt();
  const std::int64_t total = config.step_count();
  std::vector<std::int64_t> steps;
  double previous = 0.0;
  for (double t : times) {
    if (!(t > previous)) throw DimensionError("checkpoint times must be positive and increasing");
    previous = t;
    const double ratio = t / dt;
    const auto s = static_cast<std::int64_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(s)) > 1e-9 * ratio) {
      throw DimensionError("checkpoint t=" + std::to_string(t) + " is not a multiple of dt");
    }
    if (s > total) throw DimensionError("checkpoint t=" + std::to_string(t) + " exceeds the horizon T");
    steps.push_back(s);
  }
  return steps;
}

RunSummary run_one(const GalerkinModel& model, const SimConfig& config, const NoiseSpec& spec, std::uint64_t seed,
                   std::uint32_t index, std::span<const std::int64_t> steps, std::int64_t unit_steps) {
  RunSummary run;
  try {
    RandomStream stream{seed, index, 0};
    const SpectralState u0 = initial_state(model, config, spec, stream);
    run.initial_energy = std::inner_product(u0.u.begin(), u0.u.end(), u0.u.begin(), 0.0);
    if (unit_steps > 0) run.unit_martingale.push_back(0.0);
    std::size_t next = 0;
    SimulateOptions options;
    options.keep_states = false;
    options.record_samples = false;
    options.on_step = [&](std::int64_t i, const SpectralState&, const EstimatorTrace& trace) {
      while (next < steps.size() && steps[next] == i) {
        run.checkpoints.push_back(stats_from_trace(trace));
        ++next;
      }
      if (unit_steps > 0 && i % unit_steps == 0) run.unit_martingale.push_back(trace.martingale);
    };
    SimConfig quiet = config;
    quiet.output_stride = std::numeric_limits<int>::max();
    const Trajectory traj = simulate(model, u0, quiet, spec, stream, options);
    run.final = stats_from_trace(traj.trace);
  } catch (const DivergenceError& e) {
    run = RunSummary{};
    run.failed = true;
    run.failure = e.what();
  }
  return run;
}

void require_finite_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DimensionError(std::string(name) + " must be finite and > 0");
}

}  // namespace

int EnsembleSummary::failed_runs() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunSummary& r) { return r.failed; }));
}

std::size_t EnsembleSummary::checkpoint_index(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (same_time(times[i], t)) return i;
  }
  throw DimensionError("t=" + std::to_string(t) + " is not a checkpoint time of the ensemble");
}

std::vector<double> EnsembleSummary::column(double t, double CheckpointStats::*field) const {
  const std::size_t idx = checkpoint_index(t);
  std::vector<double> out;
  out.reserve(runs.size());
  for (const auto& r : runs) {
    if (!r.failed) out.push_back(r.checkpoints.at(idx).*field);
  }
  return out;
}

EnsembleSummary run_ensemble(const GalerkinModel& model, const SimConfig& config, const NoiseSpec& spec, int runs,
                             std::uint64_t seed, const EnsembleOptions& options) {
  if (runs < 1) throw DimensionError("ensemble size R must be >= 1");
  config.validate();
  if (spec.size() != model.size()) throw DimensionError("ensemble: noise and basis sizes differ");
  const auto steps = checkpoint_steps(config, options.checkpoint_times);

  std::int64_t unit_steps = 0;
  {
    const double per_unit = 1.0 / config.effective_dt();
    const auto rounded = std::llround(per_unit);
    if (rounded >= 1 && std::abs(per_unit - static_cast<double>(rounded)) <= 1e-9 * per_unit) unit_steps = rounded;
  }

  EnsembleSummary summary;
  summary.times = options.checkpoint_times;
  summary.config_hash = options.config_hash;
  summary.runs.resize(static_cast<std::size_t>(runs));

  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, runs);

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int r = next.fetch_add(1); r < runs; r = next.fetch_add(1)) {
      try {
        summary.runs[static_cast<std::size_t>(r)] =
            run_one(model, config, spec, seed, static_cast<std::uint32_t>(r), steps, unit_steps);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  const int failed = summary.failed_runs();
  if (static_cast<double>(failed) > options.max_failure_fraction * runs) {
    std::ostringstream msg;
    msg << "ensemble aborted: " << failed << " of " << runs << " runs diverged";
    for (const auto& r : summary.runs) {
      if (r.failed) {
        msg << " (first: " << r.failure << ")";
        break;
      }
    }
    throw DivergenceError(msg.str(), kNaN, kNaN);
  }
  return summary;
}

double ordered_mean(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("mean of an empty sample");
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
  if (values.empty()) throw InsufficientDataError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) throw InsufficientDataError("standard deviation needs at least 2 samples");
  std::vector<double> v(values.begin(), values.end());
  const double mean = ordered_mean(v);
  std::vector<double> sq;
  sq.reserve(v.size());
  for (double x : v) sq.push_back((x - mean) * (x - mean));
  std::sort(sq.begin(), sq.end());
  double sum = 0.0;
  for (double x : sq) sum += x;
  return std::sqrt(sum / static_cast<double>(v.size() - 1));
}

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit_line: length mismatch");
  if (x.size() < 2) throw InsufficientDataError("fit_line needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientDataError("fit_line: abscissae are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ConsistencyFit consistency_rate(const EnsembleSummary& summary, double nu, double burn_in_fraction) {
  const auto& times = summary.times;
  if (times.size() < 4) throw InsufficientDataError("consistency fit needs >= 4 checkpoints");
  if (times.back() < 10.0 * times.front()) {
    throw InsufficientDataError("consistency fit needs checkpoints spanning at least one decade");
  }
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw DimensionError("burn-in fraction must be in [0, 1)");

  ConsistencyFit fit;
  fit.times = times;
  const auto skip = static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(times.size())));
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> err;
    for (const auto& r : summary.runs) {
      if (r.failed) continue;
      const double v = r.checkpoints.at(i).nu_hat;
      if (std::isfinite(v)) err.push_back(std::abs(v - nu));
    }
    const double med = err.empty() ? kNaN : median(err);
    fit.median_abs_error.push_back(med);
    bool use = i >= skip && std::isfinite(med);
    if (use && med == 0.0) {
      ++fit.dropped_zero_medians;
      use = false;
    }
    fit.used.push_back(use);
    if (use) {
      lx.push_back(std::log(times[i]));
      ly.push_back(std::log(med));
    }
  }
  if (lx.size() < 2) throw InsufficientDataError("fewer than 2 usable checkpoints after burn-in");
  std::tie(fit.slope, fit.intercept) = fit_line(lx, ly);
  return fit;
}

double estimate_sigma_m_squared(const Trajectory& run, double burn_in_fraction, double min_length) {
  if (run.samples.empty()) throw InsufficientDataError("sigma_M estimate needs a recorded trajectory");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) throw DimensionError("burn-in fraction must be in [0, 1)");
  const auto& last = run.samples.back();
  const double tb = burn_in_fraction * last.t;
  const auto it = std::find_if(run.samples.begin(), run.samples.end(),
                               [&](const TrajectorySample& s) { return s.t >= tb - 1e-12 * std::max(1.0, tb); });
  const double length = last.t - it->t;
  if (length < min_length) {
    std::ostringstream msg;
    msg << "post-burn-in length " << length << " is below the required " << min_length << " time units";
    throw InsufficientDataError(msg.str());
  }
  return (last.trace.quadratic_variation - it->trace.quadratic_variation) / length;
}

double sigma_nu_from_sigma_m(double sigma_m, double nu, double noise_total) {
  require_finite_positive(sigma_m, "sigma_M");
  require_finite_positive(nu, "nu");
  require_finite_positive(noise_total, "B");
  return 2.0 * nu * sigma_m / noise_total;
}

double normal_cdf(double z, double sigma) { return 0.5 * std::erfc(-z / (sigma * std::sqrt(2.0))); }

double ks_distance(std::span<const double> samples, double sigma) {
  if (samples.empty()) throw InsufficientDataError("KS distance of an empty sample");
  require_finite_positive(sigma, "sigma");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i], sigma);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<double> quadratic_variation_lln(const Trajectory& run, int count) {
  if (count < 1) throw DimensionError("quadratic variation LLN needs n >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  auto it = run.samples.begin();
  for (int n = 1; n <= count; ++n) {
    const double t = n;
    it = std::find_if(it, run.samples.end(), [&](const TrajectorySample& s) { return s.t >= t - 1e-9 * t; });
    if (it == run.samples.end() || !same_time(it->t, t)) {
      throw InsufficientDataError("no recorded sample at t=" + std::to_string(n));
    }
    out.push_back(it->trace.quadratic_variation / t);
  }
  return out;
}

double supermartingale_gamma(double alpha1, const NoiseSpec& spec) {
  require_finite_positive(alpha1, "alpha_1");
  return alpha1 / (4.0 * spec.max_squared());
}

std::vector<ExceedancePoint> supermartingale_exceedance(const EnsembleSummary& summary, std::span<const double> rho,
                                                        double gamma, double nu) {
  std::vector<double> sups;
  for (const auto& r : summary.runs) {
    if (!r.failed) sups.push_back(r.final.sup_excess);
  }
  if (sups.empty()) throw InsufficientDataError("no completed runs");
  std::sort(sups.begin(), sups.end());
  const double n = static_cast<double>(sups.size());
  std::vector<ExceedancePoint> out;
  for (double level : rho) {
    ExceedancePoint p;
    p.rho = level;
    const auto above = sups.end() - std::upper_bound(sups.begin(), sups.end(), level);
    p.empirical = static_cast<double>(above) / n;
    p.bound = std::exp(-gamma * nu * level);
    p.std_error = std::sqrt(p.empirical * (1.0 - p.empirical) / n);
    out.push_back(p);
  }
  return out;
}

MomentScaling moment_scaling(const EnsembleSummary& summary, int p, std::span<const double> times, double sigma_m) {
  if (p != 1 && p != 2) throw DimensionError("moment order p must be 1 or 2");
  if (times.size() < 4) throw InsufficientDataError("moment scaling needs >= 4 checkpoint times");
  MomentScaling out;
  out.p = p;
  out.times.assign(times.begin(), times.end());
  for (double t : times) {
    std::vector<double> values = summary.column(t, &CheckpointStats::sup_abs_martingale);
    for (double& v : values) v = std::pow(v, 2 * p);
    out.moments.push_back(ordered_mean(std::move(values)));
  }
  out.zero = std::all_of(out.moments.begin(), out.moments.end(), [](double m) { return m == 0.0; });
  if (out.zero) {
    out.exponent = kNaN;
    out.intercept = kNaN;
  } else {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (out.moments[i] > 0.0) {
        lx.push_back(std::log(times[i]));
        ly.push_back(std::log(out.moments[i]));
      }
    }
    std::tie(out.exponent, out.intercept) = fit_line(lx, ly);
  }

  if (sigma_m > 0.0 && std::isfinite(sigma_m)) {
    out.theta = 0.1 / sigma_m;
    std::size_t units = std::numeric_limits<std::size_t>::max();
    bool any = false;
    for (const auto& r : summary.runs) {
      if (r.failed) continue;
      any = true;
      units = std::min(units, r.unit_martingale.size());
    }
    if (any && units >= 2) {
      for (std::size_t k = 1; k < units; ++k) {
        std::vector<double> values;
        for (const auto& r : summary.runs) {
          if (!r.failed) values.push_back(std::exp(out.theta * std::abs(r.unit_martingale[k] - r.unit_martingale[k - 1])));
        }
        out.increment_exp_moments.push_back(ordered_mean(std::move(values)));
      }
      const auto [lo, hi] = std::minmax_element(out.increment_exp_moments.begin(), out.increment_exp_moments.end());
      out.increment_spread = *hi / *lo;
    }
  }
  return out;
}

std::vector<double> delta_method_transform(std::span<const double> eta, double a, double c, double t) {
  if (a == 0.0 || !std::isfinite(a)) throw DimensionError("delta method: a must be finite and non-zero");
  require_finite_positive(c, "c");
  if (!(t >= 1.0) || !std::isfinite(t)) throw DimensionError("delta method: t must be >= 1");
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (eta[i] == 0.0) zeros.push_back(i);
  }
  if (!zeros.empty()) {
    std::ostringstream msg;
    msg << "delta method: reciprocal of zero sample at index";
    for (std::size_t i = 0; i < zeros.size() && i < 10; ++i) msg << ' ' << zeros[i];
    if (zeros.size() > 10) msg << " ... (" << zeros.size() << " total)";
    throw ReciprocalError(msg.str(), std::move(zeros));
  }
  const double scale = c * std::sqrt(t);
  std::vector<double> out(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) out[i] = scale * (1.0 / eta[i] - 1.0 / a);
  return out;
}

namespace {

double guarded_exp(double kappa_nu, double energy, double t) {
  const double x = kappa_nu * energy;
  if (!(x < kExponentGuard)) {
    std::ostringstream msg;
    msg << "kappa too large: kappa*nu*|u|^2 = " << x << " at t=" << t << " exceeds " << kExponentGuard;
    throw DimensionError(msg.str());
  }
  return std::exp(x);
}

}  // namespace

std::vector<CurvePoint> exponential_moment_curve(const EnsembleSummary& summary, double kappa_nu) {
  require_finite_positive(kappa_nu, "kappa*nu");
  std::vector<CurvePoint> out;
  std::vector<double> values;
  for (const auto& r : summary.runs) {
    if (!r.failed) values.push_back(guarded_exp(kappa_nu, r.initial_energy, 0.0));
  }
  if (values.empty()) throw InsufficientDataError("no completed runs");
  out.push_back({0.0, ordered_mean(values)});
  for (std::size_t i = 0; i < summary.times.size(); ++i) {
    values.clear();
    for (const auto& r : summary.runs) {
      if (!r.failed) values.push_back(guarded_exp(kappa_nu, r.checkpoints[i].energy, summary.times[i]));
    }
    out.push_back({summary.times[i], ordered_mean(values)});
  }
  return out;
}

std::vector<CurvePoint> exponential_moment_curve(const Trajectory& run, double kappa_nu) {
  require_finite_positive(kappa_nu, "kappa*nu");
  std::vector<CurvePoint> out;
  out.reserve(run.samples.size());
  for (const auto& s : run.samples) out.push_back({s.t, guarded_exp(kappa_nu, s.obs.energy, s.t)});
  return out;
}

std::vector<double> scaled_estimator_errors(const EnsembleSummary& summary, double t, double nu) {
  std::vector<double> out;
  const double root = std::sqrt(t);
  for (double v : summary.column(t, &CheckpointStats::nu_hat)) {
    if (std::isfinite(v)) out.push_back(root * (v - nu));
  }
  return out;
}

NormalityReport normality_report(std::span<const double> scaled_errors, double sigma_m, double sigma_nu, double t) {
  require_finite_positive(sigma_m, "sigma_M");
  require_finite_positive(sigma_nu, "sigma_nu");
  if (scaled_errors.size() < 2) throw InsufficientDataError("normality report needs >= 2 samples");
  NormalityReport r;
  r.sigma_m = sigma_m;
  r.sigma_nu = sigma_nu;
  r.ks = ks_distance(scaled_errors, sigma_nu);
  r.samples = scaled_errors.size();
  r.t = t;
  return r;
}

}  // namespace viscest
