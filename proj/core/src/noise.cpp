#include "viscest/noise.hpp"

#include <algorithm>
#include <cmath>

#include "viscest/errors.hpp"

namespace viscest {

NoiseRule parse_noise_rule(std::string_view name) {
  if (name == "explicit") return NoiseRule::explicit_list;
  if (name == "power_law") return NoiseRule::power_law;
  if (name == "flat") return NoiseRule::flat;
  throw DimensionError("unknown noise rule '" + std::string(name) + "' (expected explicit, power_law or flat)");
}

std::string_view to_string(NoiseRule rule) {
  switch (rule) {
    case NoiseRule::explicit_list:
      return "explicit";
    case NoiseRule::power_law:
      return "power_law";
    case NoiseRule::flat:
      return "flat";
  }
  return "unknown";
}

NoiseSpec::NoiseSpec(std::vector<double> amplitudes) : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.empty()) throw DimensionError("noise: at least one amplitude required");
  squared_.reserve(amplitudes_.size());
  all_positive_ = true;
  for (double b : amplitudes_) {
    if (!std::isfinite(b) || b < 0.0) {
      throw StandingAssumptionError("noise amplitudes must be finite and non-negative");
    }
    squared_.push_back(b * b);
    total_ += b * b;
    max_squared_ = std::max(max_squared_, b * b);
    all_positive_ = all_positive_ && b > 0.0;
  }
  if (!(total_ > 0.0) || !std::isfinite(total_)) {
    throw StandingAssumptionError(
        "standing assumption violated: B = sum b_j^2 must be finite and strictly positive");
  }
}

NoiseSpec make_noise_spec(NoiseRule rule, std::span<const double> params, std::span<const double> alphas) {
  const std::size_t j = alphas.size();
  for (double p : params) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DimensionError("noise parameters must be non-negative");
  }
  std::vector<double> b(j, 0.0);
  switch (rule) {
    case NoiseRule::explicit_list:
      if (params.size() != j) {
        throw DimensionError("explicit noise lists " + std::to_string(params.size()) +
                             " amplitudes for J=" + std::to_string(j) + " modes");
      }
      b.assign(params.begin(), params.end());
      break;
    case NoiseRule::power_law:
      if (params.size() != 2) throw DimensionError("power_law noise takes params {c, r}");
      for (std::size_t i = 0; i < j; ++i) b[i] = params[0] * std::pow(alphas[i], -params[1]);
      break;
    case NoiseRule::flat: {
      if (params.size() != 2) throw DimensionError("flat noise takes params {c, J'}");
      const double forced = params[1];
      if (forced != std::floor(forced)) throw DimensionError("flat noise: J' must be an integer");
      if (forced > static_cast<double>(j)) {
        throw DimensionError("flat noise forces J'=" + std::to_string(static_cast<long>(forced)) +
                             " modes but J=" + std::to_string(j));
      }
      std::fill_n(b.begin(), static_cast<std::size_t>(forced), params[0]);
      break;
    }
  }
  return NoiseSpec(std::move(b));
}

void sample_increment(const NoiseSpec& spec, double dt, RandomStream& stream, std::span<double> out,
                      int substeps) {
  if (dt < 0.0) throw DimensionError("sample_increment: dt must be >= 0");
  if (substeps < 1) throw DimensionError("sample_increment: substeps must be >= 1");
  const auto n = static_cast<std::uint32_t>(spec.size());
  if (out.size() != n) throw DimensionError("sample_increment: output length mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (int s = 0; s < substeps; ++s) {
    const std::uint64_t step = stream.counter + static_cast<std::uint64_t>(s);
    for (std::uint32_t pair = 0; 2 * pair < n; ++pair) {
      const auto g = stream.normal_pair(step, pair);
      out[2 * pair] += g[0];
      if (2 * pair + 1 < n) out[2 * pair + 1] += g[1];
    }
  }
  stream.counter += static_cast<std::uint64_t>(substeps);
  const double scale = std::sqrt(dt / substeps);
  const auto b = spec.amplitudes();
  for (std::uint32_t i = 0; i < n; ++i) out[i] *= b[i] * scale;
}

std::vector<double> sample_increment(const NoiseSpec& spec, double dt, RandomStream& stream) {
  std::vector<double> out(static_cast<std::size_t>(spec.size()));
  sample_increment(spec, dt, stream, out);
  return out;
}

}  // namespace viscest
