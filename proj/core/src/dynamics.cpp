#include "viscest/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "viscest/errors.hpp"

namespace viscest {

void SimConfig::validate() const {
  std::ostringstream problems;
  if (!(nu > 0.0) || !std::isfinite(nu)) problems << "viscosity nu must be > 0; ";
  if (!(dt > 0.0) || !std::isfinite(dt)) problems << "time step dt must be > 0; ";
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) problems << "horizon T must be >= 0; ";
  if (output_stride < 1) problems << "output stride must be >= 1; ";
  if (noise_substeps < 1) problems << "noise substeps must be >= 1; ";
  if (initial.kind == InitialCondition::Kind::warm && !(initial.warmup >= 0.0)) {
    problems << "warm-up time must be >= 0; ";
  }
  if (dt > 0.0 && horizon > 0.0 && dt <= horizon) {
    const double ratio = horizon / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      problems << "T/dt = " << ratio << " is not an integer; ";
    }
  }
  const std::string msg = problems.str();
  if (!msg.empty()) throw DimensionError("invalid simulation config: " + msg.substr(0, msg.size() - 2));
}

std::int64_t SimConfig::step_count() const {
  if (horizon <= 0.0) return 0;
  if (dt > horizon) return 1;
  return static_cast<std::int64_t>(std::llround(horizon / dt));
}

double SimConfig::effective_dt() const { return dt > horizon && horizon > 0.0 ? horizon : dt; }

ConvectionTensor::ConvectionTensor(const StokesBasis& basis) : size_(basis.size()) {
  const Eigen::Index n = size_;
  const auto& w = basis.grid().weights;
  const Eigen::MatrixXd wu1 = w.asDiagonal() * basis.u1();
  const Eigen::MatrixXd wu2 = w.asDiagonal() * basis.u2();
  coeffs_.resize(n, n * n);
  Eigen::MatrixXd adv1(basis.grid().size(), n);
  Eigen::MatrixXd adv2(basis.grid().size(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // (e_k . grad) e_l for every l
    adv1 = basis.u1().col(k).asDiagonal() * basis.d1u1() + basis.u2().col(k).asDiagonal() * basis.d2u1();
    adv2 = basis.u1().col(k).asDiagonal() * basis.d1u2() + basis.u2().col(k).asDiagonal() * basis.d2u2();
    coeffs_.middleCols(k * n, n) = wu1.transpose() * adv1 + wu2.transpose() * adv2;
  }
}

void ConvectionTensor::apply(std::span<const double> u, std::span<double> out, Eigen::VectorXd& scratch) const {
  const Eigen::Index n = size_;
  const Eigen::Map<const Eigen::VectorXd> v(u.data(), n);
  scratch.resize(n * n);
  for (Eigen::Index k = 0; k < n; ++k) scratch.segment(k * n, n) = v(k) * v;
  Eigen::Map<Eigen::VectorXd>(out.data(), n).noalias() = -(coeffs_ * scratch);
}

GalerkinModel::GalerkinModel(const StokesBasis& basis)
    : alphas_(basis.alphas().begin(), basis.alphas().end()), convection_(basis) {}

std::vector<double> nonlinear_tendency(const SpectralState& state, const StokesBasis& basis) {
  const GridField f = pointwise_field(basis, state.u);
  const Eigen::VectorXd adv1 = f.u1.cwiseProduct(f.d1u1) + f.u2.cwiseProduct(f.d2u1);
  const Eigen::VectorXd adv2 = f.u1.cwiseProduct(f.d1u2) + f.u2.cwiseProduct(f.d2u2);
  if (!adv1.allFinite() || !adv2.allFinite()) {
    throw DivergenceError("non-finite convection term at t=" + std::to_string(state.t), state.t,
                          std::numeric_limits<double>::infinity());
  }
  const auto& w = basis.grid().weights;
  const Eigen::VectorXd proj =
      -(basis.u1().transpose() * w.cwiseProduct(adv1) + basis.u2().transpose() * w.cwiseProduct(adv2));
  return {proj.data(), proj.data() + proj.size()};
}

Observables observables(const SpectralState& state, std::span<const double> alphas) {
  if (alphas.size() != state.u.size()) throw DimensionError("observables: length mismatch");
  Observables o;
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    o.energy += state.u[j] * state.u[j];
    o.enstrophy += alphas[j] * state.u[j] * state.u[j];
  }
  return o;
}

Observables observables(const SpectralState& state, const StokesBasis& basis) {
  return observables(state, basis.alphas());
}

Stepper::Stepper(const GalerkinModel& model, double nu, double dt, bool linear_only)
    : model_(&model), dt_(dt), linear_only_(linear_only) {
  const auto alphas = model.alphas();
  decay_.resize(alphas.size());
  phi_.resize(alphas.size());
  tendency_.assign(alphas.size(), 0.0);
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    const double rate = nu * alphas[j];
    decay_[j] = std::exp(-rate * dt);
    phi_[j] = -std::expm1(-rate * dt) / rate;
  }
}

void Stepper::advance(std::span<double> u, std::span<const double> dzeta) {
  const std::size_t n = decay_.size();
  if (u.size() != n || dzeta.size() != n) throw DimensionError("step: length mismatch");
  if (!linear_only_) model_->convection().apply(u, tendency_, scratch_);
  for (std::size_t j = 0; j < n; ++j) {
    u[j] = decay_[j] * (u[j] + dzeta[j]) + phi_[j] * tendency_[j];
  }
}

namespace {

void check_finite(std::span<const double> u, double t) {
  double worst = 0.0;
  bool finite = true;
  for (double x : u) {
    finite = finite && std::isfinite(x);
    worst = std::max(worst, std::abs(x));
  }
  if (!finite || worst > kDivergenceThreshold) {
    std::ostringstream msg;
    msg << "trajectory diverged at t=" << t << " (max |u_j| = " << (finite ? worst : INFINITY) << ")";
    throw DivergenceError(msg.str(), t, finite ? worst : INFINITY);
  }
}

}  // namespace

SpectralState step(const SpectralState& state, const SimConfig& config, const NoiseSpec& spec,
                   std::span<const double> dzeta, const GalerkinModel& model) {
  if (spec.size() != model.size()) throw DimensionError("step: noise and model sizes differ");
  const double dt = config.effective_dt();
  Stepper stepper(model, config.nu, dt, config.linear_only);
  SpectralState next = state;
  stepper.advance(next.u, dzeta);
  next.t = state.t + dt;
  check_finite(next.u, next.t);
  return next;
}

SpectralState initial_state(const GalerkinModel& model, const SimConfig& config, const NoiseSpec& spec,
                            RandomStream& stream) {
  const auto n = static_cast<std::size_t>(model.size());
  SpectralState s{0.0, std::vector<double>(n, 0.0)};
  switch (config.initial.kind) {
    case InitialCondition::Kind::zero:
      break;
    case InitialCondition::Kind::coefficients:
      if (config.initial.coefficients.size() != n) {
        throw DimensionError("initial condition has " + std::to_string(config.initial.coefficients.size()) +
                             " coefficients for J=" + std::to_string(n));
      }
      s.u = config.initial.coefficients;
      break;
    case InitialCondition::Kind::warm: {
      const double dt = config.dt;
      const auto steps = static_cast<std::int64_t>(std::llround(config.initial.warmup / dt));
      Stepper stepper(model, config.nu, dt, config.linear_only);
      std::vector<double> dz(n);
      for (std::int64_t i = 0; i < steps; ++i) {
        sample_increment(spec, dt, stream, dz, config.noise_substeps);
        stepper.advance(s.u, dz);
      }
      check_finite(s.u, 0.0);
      break;
    }
  }
  return s;
}

Trajectory continue_trajectory(const GalerkinModel& model, const SpectralState& state, const EstimatorTrace& trace,
                               std::int64_t start_step, const SimConfig& config, const NoiseSpec& spec,
                               RandomStream stream, const SimulateOptions& options) {
  config.validate();
  const auto n = static_cast<std::size_t>(model.size());
  if (state.u.size() != n || spec.size() != model.size()) {
    throw DimensionError("simulate: state, noise and basis sizes must agree");
  }
  const double dt = config.effective_dt();
  const std::int64_t total = config.step_count();
  const TraceWeights weights{model.alphas(), spec.squared()};

  Trajectory out;
  out.trace = trace;
  out.final_state = state;

  auto emit = [&](const SpectralState& s) {
    TrajectorySample sample;
    sample.t = s.t;
    sample.obs = observables(s, model.alphas());
    sample.trace = out.trace;
    if (options.keep_states) sample.u = s.u;
    if (options.on_sample) options.on_sample(sample);
    if (options.record_samples) out.samples.push_back(std::move(sample));
  };

  SpectralState& current = out.final_state;
  if (start_step == 0) emit(current);

  Stepper stepper(model, config.nu, dt, config.linear_only);
  std::vector<double> before(n);
  std::vector<double> dz(n);
  std::int64_t i = start_step;
  while (i < total) {
    if (static_cast<double>(i) * dt >= options.stop_time) break;
    sample_increment(spec, dt, stream, dz, config.noise_substeps);
    std::copy(current.u.begin(), current.u.end(), before.begin());
    stepper.advance(current.u, dz);
    ++i;
    current.t = static_cast<double>(i) * dt;
    check_finite(current.u, current.t);
    out.trace = accumulate(out.trace, weights, before, dz, dt, current.u);
    out.trace.t = current.t;
    if (options.on_step) options.on_step(i, current, out.trace);
    if (i % config.output_stride == 0 || i == total) emit(current);
  }
  out.stream = stream;
  out.steps = i;
  return out;
}

Trajectory simulate(const GalerkinModel& model, const SpectralState& u0, const SimConfig& config,
                    const NoiseSpec& spec, RandomStream stream, const SimulateOptions& options) {
  double energy0 = 0.0;
  for (double x : u0.u) energy0 += x * x;
  SpectralState start{0.0, u0.u};
  return continue_trajectory(model, start, start_trace(spec.total(), energy0), 0, config, spec, stream, options);
}

}  // namespace viscest
