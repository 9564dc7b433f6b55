#include "viscest_cli/commands.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "viscest/basis_cache.hpp"
#include "viscest/errors.hpp"
#include "viscest/report_io.hpp"
#include "viscest/statistics.hpp"
#include "viscest/text_format.hpp"
#include "viscest/trajectory_io.hpp"

namespace viscest::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Raised for problems the user fixes in the config or invocation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Context {
  const ExperimentConfig& config;
  const RunFlags& flags;
  std::ostream& out;
  fs::path dir;
  std::string hash;
};

// Doubles rendered in shortest round-trip form so JSON output is stable.
json num(double x) {
  if (!std::isfinite(x)) return format_double(x);
  return x;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream f(path);
  f << doc.dump(2) << '\n';
  if (!f) throw Error("cannot write " + path.string());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

// A missing or stale cache entry is rebuilt, never an error.
StokesBasis load_basis_for(const Context& ctx) {
  return load_or_build_basis(ctx.config.geometry, ctx.dir / "cache");
}

double default_kappa_nu(const ExperimentConfig& config, const NoiseSpec& spec, std::span<const double> alphas) {
  if (config.analysis.kappa_nu > 0.0) return config.analysis.kappa_nu;
  double scale = 0.0;
  for (std::size_t j = 0; j < alphas.size(); ++j) scale += spec.squared()[j] / (2.0 * config.dynamics.nu * alphas[j]);
  return 1.0 / scale;
}

double ou_sigma_m_squared(const NoiseSpec& spec, std::span<const double> alphas, double nu) {
  double s = 0.0;
  for (std::size_t j = 0; j < alphas.size(); ++j) s += spec.squared()[j] * spec.squared()[j] / (2.0 * nu * alphas[j]);
  return s;
}

std::int64_t steps_per_unit(double dt) {
  const double per = 1.0 / dt;
  const auto r = std::llround(per);
  return r >= 1 && std::abs(per - static_cast<double>(r)) <= 1e-9 * per ? r : 0;
}

void regime_note(const Context& ctx) {
  if (!ctx.config.dynamics.in_proven_regime()) {
    ctx.out << "note: nu = " << format_double(ctx.config.dynamics.nu)
            << " lies outside (0, 1], where the convergence rates are established\n";
  }
}

// ---------------------------------------------------------------- basis

int cmd_basis(Context& ctx) {
  const StokesBasis basis = load_basis_for(ctx);
  std::ostringstream table;
  table << "# config_hash=" << ctx.hash << '\n' << "index,k,parity,alpha\n";
  for (int j = 0; j < basis.size(); ++j) {
    const auto& m = basis.mode(j);
    table << j + 1 << ',' << m.k << ',' << m.parity << ',' << format_double(m.alpha) << '\n';
  }
  open_output(ctx.dir / "basis.csv") << table.str();
  ctx.out << table.str();
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulationOutcome {
  bool complete = false;
  double t = 0.0;
  std::int64_t steps = 0;
};

SimulationOutcome run_simulation(Context& ctx, const GalerkinModel& model, const NoiseSpec& spec) {
  const auto& cfg = ctx.config;
  const SimConfig& dyn = cfg.dynamics;
  const fs::path ckpt = ctx.dir / "trajectory.ckpt";
  const double dt = dyn.effective_dt();
  const std::int64_t total = dyn.step_count();
  const auto alphas = model.alphas();

  std::optional<CheckpointWriter> writer;
  SpectralState state;
  EstimatorTrace trace;
  std::int64_t start = 0;
  RandomStream stream{cfg.ensemble.seed, 0, 0};

  bool resumed = false;
  if (ctx.flags.resume && fs::exists(ckpt)) {
    CheckpointData data = read_checkpoint(ckpt);
    if (data.header.config_hash != ctx.hash) {
      throw ConfigError("checkpoint config hash " + data.header.config_hash + " does not match config hash " +
                        ctx.hash);
    }
    if (!data.records.empty()) {
      const auto& last = data.records.back();
      start = last.step;
      state = {last.t, last.u};
      trace = trace_from_record(data.header, last, alphas);
      stream.counter = data.header.counter_at_start +
                       static_cast<std::uint64_t>(last.step) * static_cast<std::uint64_t>(dyn.noise_substeps);
      writer.emplace(CheckpointWriter::reopen(ckpt, data));
      resumed = true;
      ctx.out << "resuming at t=" << format_double(last.t) << " (step " << last.step << ")\n";
    }
  } else if (ctx.flags.resume) {
    ctx.out << "no checkpoint found; starting from t=0\n";
  }

  if (!resumed) {
    state = initial_state(model, dyn, spec, stream);
    CheckpointHeader header;
    header.config_hash = ctx.hash;
    header.modes = model.size();
    header.dt = dt;
    header.nu = dyn.nu;
    header.noise_total = spec.total();
    header.initial_energy = std::inner_product(state.u.begin(), state.u.end(), state.u.begin(), 0.0);
    header.seed = stream.seed;
    header.stream = stream.stream;
    header.counter_at_start = stream.counter;
    header.noise_substeps = dyn.noise_substeps;
    writer.emplace(ckpt, header);
    trace = start_trace(spec.total(), header.initial_energy);
  }

  SimulateOptions options;
  options.record_samples = false;
  if (ctx.flags.stop_at) options.stop_time = *ctx.flags.stop_at;
  options.on_sample = [&](const TrajectorySample& s) {
    writer->append(make_record(std::llround(s.t / dt), s));
  };
  const Trajectory traj = continue_trajectory(model, state, trace, start, dyn, spec, stream, options);
  return {traj.steps >= total, traj.final_state.t, traj.steps};
}

int cmd_simulate(Context& ctx) {
  regime_note(ctx);
  const StokesBasis basis = load_basis_for(ctx);
  const GalerkinModel model(basis);
  const NoiseSpec spec = build_noise(ctx.config, basis.alphas());
  const SimulationOutcome outcome = run_simulation(ctx, model, spec);
  if (!outcome.complete) {
    ctx.out << "stopped at t=" << format_double(outcome.t) << " after " << outcome.steps
            << " steps; continue with --resume\n";
    return kExitOk;
  }
  const CheckpointData data = read_checkpoint(ctx.dir / "trajectory.ckpt");
  const auto samples = samples_from_checkpoint(data, basis.alphas());
  {
    auto csv = open_output(ctx.dir / "timeseries.csv");
    write_timeseries_csv(csv, ctx.hash, samples);
  }
  const auto& last = samples.back();
  json doc;
  doc["command"] = "simulate";
  doc["config_hash"] = ctx.hash;
  doc["seed"] = ctx.config.ensemble.seed;
  doc["steps"] = outcome.steps;
  doc["T"] = num(last.t);
  doc["energy"] = num(last.obs.energy);
  doc["nu_hat"] = num(last.trace.enstrophy_integral > 0.0 ? nu_hat(last.trace) : NAN);
  doc["energy_residual"] = num(energy_residual(last.trace, ctx.config.dynamics.nu));
  doc["pass"] = true;
  write_json(ctx.dir / "simulate.json", doc);
  ctx.out << "wrote " << samples.size() << " samples to " << (ctx.dir / "timeseries.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

int cmd_estimate(Context& ctx) {
  regime_note(ctx);
  const StokesBasis basis = load_basis_for(ctx);
  const GalerkinModel model(basis);
  const NoiseSpec spec = build_noise(ctx.config, basis.alphas());
  const SimConfig& dyn = ctx.config.dynamics;

  EstimatorTrace trace;
  std::string source = "simulation";
  const fs::path ckpt = ctx.dir / "trajectory.ckpt";
  bool have = false;
  if (fs::exists(ckpt)) {
    const CheckpointData data = read_checkpoint(ckpt);
    if (data.header.config_hash == ctx.hash && !data.records.empty() && data.records.back().step == dyn.step_count()) {
      trace = trace_from_record(data.header, data.records.back(), basis.alphas());
      source = "checkpoint";
      have = true;
    }
  }
  if (!have) {
    RandomStream stream{ctx.config.ensemble.seed, 0, 0};
    const SpectralState u0 = initial_state(model, dyn, spec, stream);
    SimulateOptions options;
    options.keep_states = false;
    options.record_samples = false;
    trace = simulate(model, u0, dyn, spec, stream, options).trace;
  }
  const double est = nu_hat(trace);
  const double x = xi(trace);
  const double residual = energy_residual(trace, dyn.nu);
  json doc;
  doc["command"] = "estimate";
  doc["config_hash"] = ctx.hash;
  doc["source"] = source;
  doc["T"] = num(trace.t);
  doc["nu"] = num(dyn.nu);
  doc["nu_hat"] = num(est);
  doc["xi"] = num(x);
  doc["xi_target"] = num(spec.total() / (2.0 * dyn.nu));
  doc["energy_residual"] = num(residual);
  doc["relative_error"] = num(std::abs(est - dyn.nu) / dyn.nu);
  doc["pass"] = true;
  write_json(ctx.dir / "estimate.json", doc);
  ctx.out << "# config_hash=" << ctx.hash << '\n'
          << "T = " << format_double(trace.t) << '\n'
          << "nu_hat = " << format_double(est) << '\n'
          << "xi = " << format_double(x) << '\n'
          << "energy_residual = " << format_double(residual) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- ensembles

EnsembleSummary ensemble_for(Context& ctx, const GalerkinModel& model, const NoiseSpec& spec) {
  if (ctx.config.ensemble.checkpoints.empty()) throw ConfigError("ensemble.checkpoints must be set for ensemble runs");
  EnsembleOptions options;
  options.checkpoint_times = ctx.config.ensemble.checkpoints;
  options.threads = ctx.flags.threads;
  options.config_hash = ctx.hash;
  ctx.out << "running " << ctx.config.ensemble.runs << " trajectories to T=" << format_double(ctx.config.dynamics.horizon)
          << '\n';
  EnsembleSummary summary =
      run_ensemble(model, ctx.config.dynamics, spec, ctx.config.ensemble.runs, ctx.config.ensemble.seed, options);
  if (summary.failed_runs() > 0) ctx.out << summary.failed_runs() << " runs diverged and were excluded\n";
  return summary;
}

// sigma_M^2 from the ensemble: per-run quadratic variation rate after the burn-in checkpoint.
double ensemble_sigma_m_squared(const EnsembleSummary& summary, double horizon, double burn_in) {
  std::size_t idx = summary.times.size();
  for (std::size_t i = 0; i < summary.times.size(); ++i) {
    if (summary.times[i] >= burn_in * horizon && summary.times[i] < horizon) {
      idx = i;
      break;
    }
  }
  std::vector<double> rates;
  for (const auto& r : summary.runs) {
    if (r.failed) continue;
    const double t0 = idx < summary.times.size() ? summary.times[idx] : 0.0;
    const double q0 = idx < summary.times.size() ? r.checkpoints[idx].quadratic_variation : 0.0;
    rates.push_back((r.final.quadratic_variation - q0) / (r.final.t - t0));
  }
  return ordered_mean(rates);
}

int cmd_mc_consistency(Context& ctx) {
  regime_note(ctx);
  const auto& cfg = ctx.config;
  const StokesBasis basis = load_basis_for(ctx);
  const GalerkinModel model(basis);
  const NoiseSpec spec = build_noise(cfg, basis.alphas());
  const EnsembleSummary summary = ensemble_for(ctx, model, spec);
  const double nu = cfg.dynamics.nu;

  const ConsistencyFit fit = consistency_rate(summary, nu, cfg.analysis.burn_in_checkpoints);
  {
    auto f = open_output(ctx.dir / "consistency.csv");
    write_consistency_csv(f, ctx.hash, fit);
  }
  const bool slope_ok = fit.slope >= -0.65 && fit.slope <= -0.35;

  const double gamma = supermartingale_gamma(basis.alphas()[0], spec);
  const auto exceed = supermartingale_exceedance(summary, cfg.analysis.rho, gamma, nu);
  {
    auto f = open_output(ctx.dir / "supermartingale.csv");
    write_supermartingale_csv(f, ctx.hash, exceed);
  }
  bool super_ok = true;
  for (const auto& p : exceed) super_ok = super_ok && p.empirical <= p.bound + 2.0 * p.std_error;

  const double sigma_m2 = ensemble_sigma_m_squared(summary, cfg.dynamics.horizon, cfg.analysis.burn_in_horizon);
  const std::vector<double> mtimes = cfg.analysis.moment_times.empty() ? summary.times : cfg.analysis.moment_times;
  const MomentScaling moments = moment_scaling(summary, 1, mtimes, std::sqrt(sigma_m2));
  const bool moment_ok = moments.zero || moments.exponent <= 1.25;
  const bool spread_ok = moments.increment_exp_moments.empty() || moments.increment_spread < 2.0;
  {
    auto f = open_output(ctx.dir / "moments.csv");
    f << "# config_hash=" << ctx.hash << '\n' << "t,moment\n";
    for (std::size_t i = 0; i < moments.times.size(); ++i) {
      f << format_double(moments.times[i]) << ',' << format_double(moments.moments[i]) << '\n';
    }
  }

  json curve_doc;
  try {
    const auto curve = exponential_moment_curve(summary, default_kappa_nu(cfg, spec, basis.alphas()));
    auto f = open_output(ctx.dir / "exp_moment.csv");
    write_curve_csv(f, ctx.hash, curve);
    curve_doc["status"] = "written";
  } catch (const DimensionError& e) {
    curve_doc["status"] = "skipped";
    curve_doc["reason"] = e.what();
  }

  json doc;
  doc["command"] = "mc-consistency";
  doc["config_hash"] = ctx.hash;
  doc["runs"] = summary.run_count();
  doc["failed_runs"] = summary.failed_runs();
  doc["slope"] = num(fit.slope);
  doc["slope_band"] = {-0.65, -0.35};
  doc["dropped_zero_medians"] = fit.dropped_zero_medians;
  doc["slope_ok"] = slope_ok;
  doc["gamma"] = num(gamma);
  doc["supermartingale_ok"] = super_ok;
  doc["sigma_m_squared"] = num(sigma_m2);
  doc["moment_exponent_p1"] = num(moments.exponent);
  doc["moment_zero"] = moments.zero;
  doc["moment_ok"] = moment_ok;
  doc["increment_spread"] = num(moments.increment_spread);
  doc["increment_spread_ok"] = spread_ok;
  doc["exp_moment_curve"] = curve_doc;
  const bool pass = slope_ok && super_ok && moment_ok && spread_ok;
  doc["pass"] = pass;
  write_json(ctx.dir / "mc-consistency.json", doc);

  ctx.out << "# config_hash=" << ctx.hash << '\n'
          << "slope = " << format_double(fit.slope) << (slope_ok ? "  [ok]" : "  [outside -0.65..-0.35]") << '\n'
          << "supermartingale bound " << (super_ok ? "holds" : "VIOLATED") << '\n'
          << "moment exponent (p=1) = " << format_double(moments.exponent) << (moment_ok ? "  [ok]" : "  [too large]")
          << '\n'
          << "increment exp-moment spread = " << format_double(moments.increment_spread) << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_mc_normality(Context& ctx) {
  regime_note(ctx);
  const auto& cfg = ctx.config;
  const StokesBasis basis = load_basis_for(ctx);
  const GalerkinModel model(basis);
  const NoiseSpec spec = build_noise(cfg, basis.alphas());
  const double nu = cfg.dynamics.nu;

  // Long stationary run for sigma_M and the quadratic-variation LLN.
  SimConfig long_cfg = cfg.dynamics;
  long_cfg.horizon = cfg.analysis.sigma_run_horizon;
  const std::int64_t unit = steps_per_unit(long_cfg.dt);
  long_cfg.output_stride = unit > 0 ? static_cast<int>(unit) : 1;
  RandomStream stream{cfg.ensemble.seed, kLongRunStream, 0};
  const SpectralState u0 = initial_state(model, long_cfg, spec, stream);
  SimulateOptions options;
  options.keep_states = false;
  ctx.out << "long run to T=" << format_double(long_cfg.horizon) << '\n';
  const Trajectory long_run = simulate(model, u0, long_cfg, spec, stream, options);
  const double sigma_m2 = estimate_sigma_m_squared(long_run, cfg.analysis.burn_in_horizon);
  const double sigma_m = std::sqrt(sigma_m2);

  json qv_doc;
  bool qv_ok = true;
  if (unit > 0) {
    const auto qv = quadratic_variation_lln(long_run, cfg.analysis.qv_count);
    auto f = open_output(ctx.dir / "qv_lln.csv");
    write_qv_lln_csv(f, ctx.hash, qv);
    const double last = qv.back();
    qv_ok = std::abs(last - sigma_m2) <= 0.1 * sigma_m2;
    qv_doc["n"] = cfg.analysis.qv_count;
    qv_doc["value"] = num(last);
    qv_doc["ok"] = qv_ok;
  } else {
    qv_doc["status"] = "skipped: 1/dt is not an integer";
  }
  if (cfg.dynamics.linear_only) {
    const double closed = ou_sigma_m_squared(spec, basis.alphas(), nu);
    const bool ok = std::abs(sigma_m2 - closed) <= 0.1 * closed;
    qv_doc["ou_sigma_m_squared"] = num(closed);
    qv_doc["ou_ok"] = ok;
    qv_ok = qv_ok && ok;
  }

  const EnsembleSummary summary = ensemble_for(ctx, model, spec);
  const double t = cfg.analysis.normality_time > 0.0 ? cfg.analysis.normality_time : summary.times.back();
  const auto errors = scaled_estimator_errors(summary, t, nu);
  const double sigma_nu = cfg.analysis.ks_sigma == KsSigmaSource::derived
                              ? sigma_nu_from_sigma_m(sigma_m, nu, spec.total())
                              : sample_std(errors);
  const NormalityReport report = normality_report(errors, sigma_m, sigma_nu, t);
  std::vector<double> standardized(errors);
  for (double& z : standardized) z /= sigma_nu;
  {
    auto f = open_output(ctx.dir / "normality.csv");
    write_normality_csv(f, ctx.hash, standardized, 1.0);
  }
  const bool ks_ok = report.ks <= cfg.analysis.ks_threshold;

  json doc;
  doc["command"] = "mc-normality";
  doc["config_hash"] = ctx.hash;
  doc["runs"] = summary.run_count();
  doc["failed_runs"] = summary.failed_runs();
  doc["t"] = num(report.t);
  doc["samples"] = report.samples;
  doc["sigma_m"] = num(report.sigma_m);
  doc["sigma_nu"] = num(report.sigma_nu);
  doc["sigma_nu_source"] = cfg.analysis.ks_sigma == KsSigmaSource::derived ? "derived" : "empirical";
  doc["sigma_nu_empirical"] = num(sample_std(errors));
  doc["ks"] = num(report.ks);
  doc["ks_threshold"] = num(cfg.analysis.ks_threshold);
  doc["ks_ok"] = ks_ok;
  doc["qv_lln"] = qv_doc;
  const bool pass = ks_ok && qv_ok;
  doc["pass"] = pass;
  write_json(ctx.dir / "mc-normality.json", doc);

  ctx.out << "# config_hash=" << ctx.hash << '\n'
          << "sigma_M = " << format_double(sigma_m) << ", sigma_nu = " << format_double(sigma_nu) << '\n'
          << "KS = " << format_double(report.ks) << (ks_ok ? "  [ok]" : "  [above threshold]") << '\n'
          << "quadratic-variation LLN " << (qv_ok ? "ok" : "FAILED") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- validate

struct Check {
  std::string name;
  double value;
  double tolerance;
  bool ok() const { return std::isfinite(value) && value <= tolerance; }
};

int cmd_validate(Context& ctx) {
  const auto& cfg = ctx.config;
  std::vector<Check> checks;

  {
    const auto spectrum = converged_wall_spectrum(0, cfg.geometry.resolved());
    double worst = 0.0;
    const std::size_t n = std::min<std::size_t>(8, spectrum.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = std::pow((static_cast<double>(i) + 1.0) * std::numbers::pi / 2.0, 2);
      worst = std::max(worst, std::abs(spectrum[i].alpha - exact) / exact);
    }
    checks.push_back({"k0_spectrum_rel_err", n > 0 ? worst : NAN, 1e-8});
  }

  const StokesBasis basis = load_basis_for(ctx);
  const auto J = static_cast<std::size_t>(basis.size());
  {
    const Eigen::MatrixXd g = gram_matrix(basis);
    checks.push_back({"gram_identity_err", (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-10});
  }
  {
    double worst = 0.0;
    std::vector<double> e(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      worst = std::max(worst, scaled_divergence(basis, pointwise_field(basis, e)));
    }
    checks.push_back({"scaled_divergence", worst, 1e-8});
  }

  const GalerkinModel model(basis);
  {
    RandomStream rs{cfg.ensemble.seed, kLongRunStream - 1, 0};
    double neutral = 0.0;
    double agreement = 0.0;
    std::vector<double> u(J), tend(J);
    Eigen::VectorXd scratch;
    for (int trial = 0; trial < 100; ++trial) {
      for (std::size_t j = 0; j < J; ++j) u[j] = rs.normal_at(static_cast<std::uint64_t>(trial), static_cast<std::uint32_t>(j));
      model.convection().apply(u, tend, scratch);
      double dot = 0.0, norm2 = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        dot += tend[j] * u[j];
        norm2 += u[j] * u[j];
      }
      neutral = std::max(neutral, std::abs(dot) / (1.0 + std::pow(norm2, 1.5)));
      const auto pseudo = nonlinear_tendency({0.0, u}, basis);
      double diff = 0.0, scale = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        diff = std::max(diff, std::abs(pseudo[j] - tend[j]));
        scale = std::max(scale, std::abs(pseudo[j]));
      }
      agreement = std::max(agreement, diff / std::max(scale, 1.0));
    }
    checks.push_back({"energy_neutrality", neutral, 1e-8});
    checks.push_back({"convection_tensor_vs_grid", agreement, 1e-10});
  }
  {
    // Noise-free linear flow: the exponential step is exact.
    const double T = 1.0;
    const double dt = 1e-2;
    Stepper stepper(model, cfg.dynamics.nu, dt, true);
    std::vector<double> u(J, 1.0), zero(J, 0.0);
    for (int i = 0; i < 100; ++i) stepper.advance(u, zero);
    double worst = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      worst = std::max(worst, std::abs(u[j] - std::exp(-cfg.dynamics.nu * basis.alphas()[j] * T)));
    }
    checks.push_back({"ou_free_decay_err", worst, 1e-12});
  }
  {
    // Stationary variance of the exponential scheme on the linear flow:
    // Var = b^2 dt E^2 / (1 - E^2) -> b^2 / (2 nu alpha) as dt -> 0.
    const NoiseSpec spec = build_noise(cfg, basis.alphas());
    const double dt = cfg.dynamics.dt;
    double worst = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      if (spec.squared()[j] == 0.0) continue;
      const double rate = cfg.dynamics.nu * basis.alphas()[j];
      const double e2 = std::exp(-2.0 * rate * dt);
      const double discrete = spec.squared()[j] * dt * e2 / (1.0 - e2);
      const double exact = spec.squared()[j] / (2.0 * rate);
      worst = std::max(worst, std::abs(discrete - exact) / exact / (rate * dt));
    }
    checks.push_back({"ou_variance_bias_per_rate_dt", worst, 1.0 + 1e-9});
  }
  {
    // Ito residual under dt-refinement on shared Brownian paths. The realized
    // quadratic variation adds a mean-zero O(sqrt(dt)) term to each residual,
    // so the first-order drift is compared through the mean over streams.
    const NoiseSpec spec = build_noise(cfg, basis.alphas());
    SimConfig fine = cfg.dynamics;
    fine.horizon = 10.0;
    fine.horizon = std::round(fine.horizon / (2.0 * fine.dt)) * 2.0 * fine.dt;
    fine.initial = {};
    SimConfig coarse = fine;
    coarse.dt = 2.0 * fine.dt;
    coarse.noise_substeps = 2 * fine.noise_substeps;
    SimulateOptions options;
    options.keep_states = false;
    options.record_samples = false;
    double rf = 0.0, rc = 0.0;
    constexpr std::uint32_t kStreams = 32;
    for (std::uint32_t s = 0; s < kStreams; ++s) {
      const SpectralState zero{0.0, std::vector<double>(J, 0.0)};
      rf += energy_residual(simulate(model, zero, fine, spec, {cfg.ensemble.seed, s, 0}, options).trace, fine.nu);
      rc += energy_residual(simulate(model, zero, coarse, spec, {cfg.ensemble.seed, s, 0}, options).trace, fine.nu);
    }
    rf = std::abs(rf);
    rc = std::abs(rc);
    checks.push_back({"ito_residual_refinement_ratio", rc > 0.0 ? rf / rc : NAN, 0.6});
  }

  bool pass = true;
  json rows = json::array();
  ctx.out << "# config_hash=" << ctx.hash << '\n';
  ctx.out << std::left << std::setw(34) << "check" << std::setw(26) << "value" << std::setw(12) << "tolerance"
          << "status\n";
  for (const auto& c : checks) {
    pass = pass && c.ok();
    ctx.out << std::setw(34) << c.name << std::setw(26) << format_double(c.value) << std::setw(12)
            << format_double(c.tolerance) << (c.ok() ? "ok" : "FAIL") << '\n';
    rows.push_back({{"name", c.name}, {"value", num(c.value)}, {"tolerance", num(c.tolerance)}, {"ok", c.ok()}});
  }
  ctx.out << std::right;
  json doc;
  doc["command"] = "validate";
  doc["config_hash"] = ctx.hash;
  doc["checks"] = rows;
  doc["pass"] = pass;
  write_json(ctx.dir / "validate.json", doc);
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- report

int cmd_report(Context& ctx) {
  static const char* const kDocuments[] = {"validate", "simulate", "estimate", "mc-consistency", "mc-normality"};
  json doc;
  doc["command"] = "report";
  doc["config_hash"] = ctx.hash;
  json parts = json::object();
  json mismatched = json::array();
  bool pass = true;
  ctx.out << "# config_hash=" << ctx.hash << '\n';
  for (const char* name : kDocuments) {
    const fs::path path = ctx.dir / (std::string(name) + ".json");
    if (!fs::exists(path)) {
      ctx.out << std::left << std::setw(16) << name << "missing\n" << std::right;
      continue;
    }
    std::ifstream f(path);
    json part;
    try {
      part = json::parse(f);
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    const bool same = part.value("config_hash", "") == ctx.hash;
    if (!same) mismatched.push_back(name);
    const bool ok = same && part.value("pass", false);
    pass = pass && ok;
    ctx.out << std::left << std::setw(16) << name << (ok ? "pass" : (same ? "FAIL" : "stale (hash mismatch)")) << '\n'
            << std::right;
    parts[name] = std::move(part);
  }
  if (parts.empty()) {
    ctx.out << "no outputs to aggregate in " << ctx.dir.string() << '\n';
    pass = false;
  }
  doc["hash_mismatch"] = mismatched;
  doc["documents"] = parts;
  doc["pass"] = pass;
  write_json(ctx.dir / "report.json", doc);
  return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::string error_block(std::string_view kind, int exit_code, std::string_view message,
                        const std::vector<ConfigIssue>& issues) {
  json e;
  e["kind"] = kind;
  e["exit_code"] = exit_code;
  e["message"] = message;
  json list = json::array();
  for (const auto& i : issues) {
    list.push_back({{"line", i.line}, {"key", i.key}, {"message", i.message}, {"standing_assumption", i.standing_assumption}});
  }
  e["issues"] = list;
  json doc;
  doc["error"] = e;
  return doc.dump(2);
}

int run_subcommand(std::string_view name, const ExperimentConfig& config, const RunFlags& flags, std::ostream& out,
                   std::ostream& err) {
  Context ctx{config, flags, out, fs::path(config.output_dir), config.hash()};
  try {
    fs::create_directories(ctx.dir);
    if (name == "basis") return cmd_basis(ctx);
    if (name == "simulate") return cmd_simulate(ctx);
    if (name == "estimate") return cmd_estimate(ctx);
    if (name == "mc-consistency") return cmd_mc_consistency(ctx);
    if (name == "mc-normality") return cmd_mc_normality(ctx);
    if (name == "validate") return cmd_validate(ctx);
    if (name == "report") return cmd_report(ctx);
    err << error_block("usage", kExitConfig, "unknown subcommand '" + std::string(name) + "'") << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << error_block("divergence", kExitDivergence, e.what()) << '\n';
    return kExitDivergence;
  } catch (const StandingAssumptionError& e) {
    err << error_block("standing_assumption", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << error_block("config", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const ResolutionError& e) {
    err << error_block("resolution", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const CapacityError& e) {
    err << error_block("capacity", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << error_block("dimension", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << error_block("format", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << error_block("runtime", kExitCheckFailed, e.what()) << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace viscest::cli
