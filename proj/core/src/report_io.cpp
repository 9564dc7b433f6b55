#include "viscest/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "viscest/errors.hpp"
#include "viscest/text_format.hpp"

namespace viscest {

namespace {

void hash_line(std::ostream& out, const std::string& config_hash) { out << "# config_hash=" << config_hash << '\n'; }

}  // namespace

void write_consistency_csv(std::ostream& out, const std::string& config_hash, const ConsistencyFit& fit) {
  hash_line(out, config_hash);
  out << "t,median_abs_err,fit,used\n";
  for (std::size_t i = 0; i < fit.times.size(); ++i) {
    const double t = fit.times[i];
    out << format_double(t) << ',' << format_double(fit.median_abs_error[i]) << ','
        << format_double(std::exp(fit.intercept) * std::pow(t, fit.slope)) << ',' << (fit.used[i] ? 1 : 0) << '\n';
  }
}

double empirical_cdf(std::span<const double> sorted_samples, double z) {
  if (sorted_samples.empty()) throw InsufficientDataError("empirical CDF of an empty sample");
  const auto below = std::upper_bound(sorted_samples.begin(), sorted_samples.end(), z) - sorted_samples.begin();
  return static_cast<double>(below) / static_cast<double>(sorted_samples.size());
}

void write_normality_csv(std::ostream& out, const std::string& config_hash, std::span<const double> samples,
                         double sigma, double z_max, int points) {
  if (points < 2) throw DimensionError("normality grid needs >= 2 points");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  hash_line(out, config_hash);
  out << "z,F_emp,Phi_sigma\n";
  for (int i = 0; i < points; ++i) {
    const double z = -z_max + 2.0 * z_max * i / (points - 1);
    out << format_double(z) << ',' << format_double(empirical_cdf(sorted, z)) << ','
        << format_double(normal_cdf(z, sigma)) << '\n';
  }
}

void write_supermartingale_csv(std::ostream& out, const std::string& config_hash,
                               std::span<const ExceedancePoint> points) {
  hash_line(out, config_hash);
  out << "rho,empirical,bound,std_error\n";
  for (const auto& p : points) {
    out << format_double(p.rho) << ',' << format_double(p.empirical) << ',' << format_double(p.bound) << ','
        << format_double(p.std_error) << '\n';
  }
}

void write_qv_lln_csv(std::ostream& out, const std::string& config_hash, std::span<const double> values) {
  hash_line(out, config_hash);
  out << "n,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << (i + 1) << ',' << format_double(values[i]) << '\n';
}

void write_curve_csv(std::ostream& out, const std::string& config_hash, std::span<const CurvePoint> curve) {
  hash_line(out, config_hash);
  out << "t,value\n";
  for (const auto& p : curve) out << format_double(p.t) << ',' << format_double(p.value) << '\n';
}

}  // namespace viscest
