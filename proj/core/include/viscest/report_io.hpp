#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "viscest/statistics.hpp"

namespace viscest {

// CSV tables. Each starts with a "# config_hash=<hash>" line.

/// t,median_abs_err,fit,used with fit = exp(intercept) t^slope.
void write_consistency_csv(std::ostream& out, const std::string& config_hash, const ConsistencyFit& fit);

/// z,F_emp,Phi_sigma on an even grid of `points` values over [-z_max, z_max].
void write_normality_csv(std::ostream& out, const std::string& config_hash, std::span<const double> samples,
                         double sigma, double z_max = 4.0, int points = 81);

/// rho,empirical,bound,std_error.
void write_supermartingale_csv(std::ostream& out, const std::string& config_hash,
                               std::span<const ExceedancePoint> points);

/// n,value for the sequence n^{-1} <M>_n, n = 1, 2, ...
void write_qv_lln_csv(std::ostream& out, const std::string& config_hash, std::span<const double> values);

/// t,value.
void write_curve_csv(std::ostream& out, const std::string& config_hash, std::span<const CurvePoint> curve);

/// Empirical CDF of `samples` at z (fraction of samples <= z).
double empirical_cdf(std::span<const double> sorted_samples, double z);

}  // namespace viscest
