#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viscest/random.hpp"

namespace viscest {

/// Constructor rules for the amplitudes b_j.
enum class NoiseRule {
  explicit_list,  // params: b_1..b_J
  power_law,      // params: {c, r}, b_j = c * alpha_j^(-r)
  flat,           // params: {c, J'}, b_j = c for j <= J', zero beyond
};

NoiseRule parse_noise_rule(std::string_view name);
std::string_view to_string(NoiseRule rule);

/// Amplitudes of zeta(t) = sum_j b_j beta_j(t) e_j, truncated to J modes.
class NoiseSpec {
 public:
  /// Throws StandingAssumptionError unless every b_j >= 0 and B > 0.
  explicit NoiseSpec(std::vector<double> amplitudes);

  std::span<const double> amplitudes() const { return amplitudes_; }
  std::span<const double> squared() const { return squared_; }
  int size() const { return static_cast<int>(amplitudes_.size()); }
  double total() const { return total_; }  // B = sum b_j^2
  double max_squared() const { return max_squared_; }
  bool all_positive() const { return all_positive_; }

 private:
  std::vector<double> amplitudes_;
  std::vector<double> squared_;
  double total_ = 0.0;
  double max_squared_ = 0.0;
  bool all_positive_ = false;
};

/// `alphas` are the basis eigenvalues; its length fixes J.
NoiseSpec make_noise_spec(NoiseRule rule, std::span<const double> params, std::span<const double> alphas);

/// Writes dzeta_j = b_j sqrt(dt) g_j into `out` and advances the stream.
///
/// With substeps > 1 the increment is the sum of `substeps` consecutive
/// draws of length dt / substeps, which reproduces on a coarse grid exactly
/// the Brownian path seen by a run with the finer step.
void sample_increment(const NoiseSpec& spec, double dt, RandomStream& stream, std::span<double> out,
                      int substeps = 1);

std::vector<double> sample_increment(const NoiseSpec& spec, double dt, RandomStream& stream);

}  // namespace viscest
