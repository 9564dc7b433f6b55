#include "viscest/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "viscest/errors.hpp"

namespace viscest {

EstimatorTrace start_trace(double noise_total, double initial_energy) {
  EstimatorTrace trace;
  trace.noise_total = noise_total;
  trace.initial_energy = initial_energy;
  trace.energy = initial_energy;
  return trace;
}

EstimatorTrace accumulate(EstimatorTrace trace, const TraceWeights& weights, std::span<const double> before,
                          std::span<const double> dzeta, double dt, std::span<const double> after) {
  if (dt < 0.0) throw DimensionError("accumulate: negative dt");
  const std::size_t n = before.size();
  if (dzeta.size() != n || after.size() != n || weights.alpha.size() != n || weights.b_squared.size() != n) {
    throw DimensionError("accumulate: length mismatch");
  }
  double enstrophy = 0.0;
  double qv_rate = 0.0;
  double dm = 0.0;
  double energy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = before[j];
    enstrophy += weights.alpha[j] * u * u;
    qv_rate += weights.b_squared[j] * u * u;
    dm += u * dzeta[j];
    energy += after[j] * after[j];
  }
  trace.t += dt;
  trace.enstrophy_integral += dt * enstrophy;
  trace.quadratic_variation += dt * qv_rate;
  trace.martingale += dm;
  trace.energy = energy;
  trace.sup_excess =
      std::max(trace.sup_excess, energy - trace.initial_energy - trace.noise_total * trace.t);
  trace.sup_abs_martingale = std::max(trace.sup_abs_martingale, std::abs(trace.martingale));
  return trace;
}

double xi(const EstimatorTrace& trace) {
  if (!(trace.t > 0.0)) throw UndefinedEstimatorError("xi_t is undefined at t = 0");
  return trace.enstrophy_integral / trace.t;
}

double nu_hat(const EstimatorTrace& trace) {
  if (!(trace.t > 0.0)) throw UndefinedEstimatorError("nu_hat is undefined at t = 0");
  if (!(trace.enstrophy_integral > 0.0)) {
    throw UndefinedEstimatorError("nu_hat is undefined: Q_t = 0 at t = " + std::to_string(trace.t));
  }
  return trace.noise_total / (2.0 * xi(trace));
}

double energy_residual(const EstimatorTrace& trace, double nu) {
  return trace.energy + 2.0 * nu * trace.enstrophy_integral - trace.initial_energy -
         trace.noise_total * trace.t - 2.0 * trace.martingale;
}

}  // namespace viscest
