#pragma once

#include <span>

namespace viscest {

/// Running functionals of one trajectory. The energy balance
///   |u(t)|^2 + 2 nu Q_t = |u_0|^2 + B t + 2 M_t
/// holds exactly for the continuous flow; the estimator is nu_hat = B t / (2 Q_t).
struct EstimatorTrace {
  double t = 0.0;
  double enstrophy_integral = 0.0;   // Q_t = int_0^t |grad u|^2 ds
  double martingale = 0.0;           // M_t = int_0^t (u, dzeta)
  double quadratic_variation = 0.0;  // <M>_t = int_0^t sum_j b_j^2 u_j^2 ds
  double initial_energy = 0.0;       // |u_0|^2
  double energy = 0.0;               // |u(t)|^2
  double noise_total = 0.0;          // B
  double sup_excess = 0.0;           // sup_{s<=t} (|u(s)|^2 - |u_0|^2 - B s)
  double sup_abs_martingale = 0.0;   // sup_{s<=t} |M_s|
};

EstimatorTrace start_trace(double noise_total, double initial_energy);

/// Per-mode weights: enstrophy uses alpha_j, quadratic variation b_j^2.
struct TraceWeights {
  std::span<const double> alpha;
  std::span<const double> b_squared;
};

/// Left-point (Ito) update over one step of length dt.
EstimatorTrace accumulate(EstimatorTrace trace, const TraceWeights& weights, std::span<const double> before,
                          std::span<const double> dzeta, double dt, std::span<const double> after);

/// xi_t = Q_t / t. Throws UndefinedEstimatorError at t = 0.
double xi(const EstimatorTrace& trace);

/// nu_hat_t = B t / (2 Q_t). Throws UndefinedEstimatorError if t = 0 or Q_t = 0.
double nu_hat(const EstimatorTrace& trace);

/// |u(t)|^2 + 2 nu Q_t - |u_0|^2 - B t - 2 M_t, with nu the simulated viscosity.
double energy_residual(const EstimatorTrace& trace, double nu);

}  // namespace viscest
