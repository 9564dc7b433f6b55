#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "viscest/estimator.hpp"
#include "viscest/noise.hpp"
#include "viscest/random.hpp"
#include "viscest/stokes_basis.hpp"

namespace viscest {

/// Galerkin coefficients u_j = (u, e_j) at time t.
struct SpectralState {
  double t = 0.0;
  std::vector<double> u;
};

struct InitialCondition {
  enum class Kind {
    zero,
    coefficients,
    warm,  // integrate `warmup` time units from rest, then reset the clock
  };
  Kind kind = Kind::zero;
  std::vector<double> coefficients;
  double warmup = 0.0;
};

struct SimConfig {
  double nu = 0.5;
  double dt = 1e-3;
  double horizon = 1.0;  // T
  bool linear_only = false;
  InitialCondition initial;
  int output_stride = 1;
  int noise_substeps = 1;

  void validate() const;

  /// Number of steps covering [0, T]; dt > T collapses to a single step.
  std::int64_t step_count() const;
  /// Step length actually used (T when dt > T).
  double effective_dt() const;
  /// Rates are proven for nu in (0, 1]; larger values are allowed but flagged.
  bool in_proven_regime() const { return nu <= 1.0; }
};

/// Any |u_j| above this aborts the trajectory.
inline constexpr double kDivergenceThreshold = 1e12;

/// Interaction coefficients C_jkl = (e_j, (e_k . grad) e_l), computed once by
/// the same grid quadrature as the pseudospectral tendency.
class ConvectionTensor {
 public:
  explicit ConvectionTensor(const StokesBasis& basis);

  int size() const { return size_; }
  /// out_j = -sum_{k,l} C_jkl u_k u_l; `scratch` holds u (x) u.
  void apply(std::span<const double> u, std::span<double> out, Eigen::VectorXd& scratch) const;
  double coefficient(int j, int k, int l) const { return coeffs_(j, k * size_ + l); }

 private:
  int size_ = 0;
  Eigen::MatrixXd coeffs_;  // J x J^2, column k*J + l
};

/// What the time stepper needs from the basis.
class GalerkinModel {
 public:
  explicit GalerkinModel(const StokesBasis& basis);

  int size() const { return static_cast<int>(alphas_.size()); }
  std::span<const double> alphas() const { return alphas_; }
  const ConvectionTensor& convection() const { return convection_; }

 private:
  std::vector<double> alphas_;
  ConvectionTensor convection_;
};

/// Coefficients of -B(u) by pseudospectral evaluation on the quadrature grid.
std::vector<double> nonlinear_tendency(const SpectralState& state, const StokesBasis& basis);

struct Observables {
  double energy = 0.0;     // |u|^2 = sum u_j^2
  double enstrophy = 0.0;  // |grad u|^2 = sum alpha_j u_j^2
};

Observables observables(const SpectralState& state, std::span<const double> alphas);
Observables observables(const SpectralState& state, const StokesBasis& basis);

/// Exponential Euler-Maruyama step for a fixed (nu, dt):
///   u_j <- E_j u_j + phi_j N_j(u) + E_j dzeta_j,
///   E_j = exp(-nu alpha_j dt), phi_j = (1 - E_j) / (nu alpha_j),
/// with N evaluated at the left endpoint.
class Stepper {
 public:
  Stepper(const GalerkinModel& model, double nu, double dt, bool linear_only);

  double dt() const { return dt_; }
  /// Advances state.u in place; state.t is left to the caller.
  void advance(std::span<double> u, std::span<const double> dzeta);

 private:
  const GalerkinModel* model_;
  double dt_;
  bool linear_only_;
  std::vector<double> decay_;
  std::vector<double> phi_;
  std::vector<double> tendency_;
  Eigen::VectorXd scratch_;
};

/// One step; throws DivergenceError on non-finite or exploding output.
SpectralState step(const SpectralState& state, const SimConfig& config, const NoiseSpec& spec,
                   std::span<const double> dzeta, const GalerkinModel& model);

struct TrajectorySample {
  double t = 0.0;
  Observables obs;
  EstimatorTrace trace;
  std::vector<double> u;  // empty unless states are kept
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  EstimatorTrace trace;
  SpectralState final_state;
  RandomStream stream;  // stream position after the last step
  std::int64_t steps = 0;
};

struct SimulateOptions {
  bool keep_states = true;
  bool record_samples = true;  // false: samples are only passed to on_sample
  /// Stop (without error) once this time is reached; used to emulate interruption.
  double stop_time = std::numeric_limits<double>::infinity();
  std::function<void(const TrajectorySample&)> on_sample;
  std::function<void(std::int64_t step, const SpectralState&, const EstimatorTrace&)> on_step;
};

/// Resolves config.initial; warm starts consume draws from `stream`.
SpectralState initial_state(const GalerkinModel& model, const SimConfig& config, const NoiseSpec& spec,
                            RandomStream& stream);

/// Runs [0, T] from u0. Deterministic in (u0, config, spec, stream).
Trajectory simulate(const GalerkinModel& model, const SpectralState& u0, const SimConfig& config,
                    const NoiseSpec& spec, RandomStream stream, const SimulateOptions& options = {});

/// Continues a trajectory from global step `start_step` with accumulated `trace`.
/// `stream` must sit at the counter that the uninterrupted run had at that step.
Trajectory continue_trajectory(const GalerkinModel& model, const SpectralState& state, const EstimatorTrace& trace,
                               std::int64_t start_step, const SimConfig& config, const NoiseSpec& spec,
                               RandomStream stream, const SimulateOptions& options = {});

}  // namespace viscest
