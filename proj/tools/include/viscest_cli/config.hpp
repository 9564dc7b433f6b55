#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viscest/dynamics.hpp"
#include "viscest/noise.hpp"
#include "viscest/stokes_basis.hpp"

namespace viscest::cli {

enum class KsSigmaSource { derived, empirical };

struct EnsembleBlock {
  int runs = 64;
  std::uint64_t seed = 1;
  std::vector<double> checkpoints;  // required by the ensemble subcommands
};

struct AnalysisBlock {
  std::vector<double> rho{1.0, 2.0, 4.0, 8.0, 16.0};
  double kappa_nu = 0.0;  // 0: reciprocal of the stationary energy scale sum_j b_j^2 / (2 nu alpha_j)
  double burn_in_checkpoints = 0.2;  // fraction of checkpoints dropped from rate fits
  double burn_in_horizon = 0.2;      // fraction of a run dropped from ergodic averages
  KsSigmaSource ks_sigma = KsSigmaSource::derived;
  double ks_threshold = 0.12;
  double sigma_run_horizon = 500.0;  // length of the long run behind sigma_M
  double normality_time = 0.0;       // 0: last ensemble checkpoint
  int qv_count = 200;
  std::vector<double> moment_times;  // empty: all ensemble checkpoints
};

struct ExperimentConfig {
  ChannelGeometry geometry;
  NoiseRule noise_rule = NoiseRule::power_law;
  std::vector<double> noise_params{1.0, 0.5};
  SimConfig dynamics;
  EnsembleBlock ensemble;
  AnalysisBlock analysis;
  std::string output_dir = "viscest-out";

  /// Every key with its effective value, sorted, one "key = value" per line.
  /// output.dir is excluded: it names a location, not an experiment.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
};

/// One problem found while parsing; line is 0 for cross-key checks.
struct ConfigIssue {
  int line = 0;
  std::string key;
  std::string message;
  bool standing_assumption = false;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigIssue> issues;

  bool ok() const { return config.has_value(); }
};

/// Flat "section.key = value" text with '#' comments. Unknown keys, duplicate
/// keys and every validity rule are reported together.
ParseResult parse_config(std::string_view text);

/// Re-runs the cross-key validation, e.g. after command-line overrides.
std::vector<ConfigIssue> validate_config(const ExperimentConfig& config);

/// Amplitudes b_j for the configured rule on the given eigenvalues.
NoiseSpec build_noise(const ExperimentConfig& config, std::span<const double> alphas);

}  // namespace viscest::cli
