#include "viscest_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "viscest/errors.hpp"
#include "viscest/text_format.hpp"

namespace viscest::cli {

namespace {

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  Setter set;
  Getter get;
  bool hashed = true;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_list(std::string_view value) {
  std::string flat(value);
  std::replace(flat.begin(), flat.end(), ',', ' ');
  std::vector<double> out;
  for (auto token : split_whitespace(flat)) out.push_back(parse_double(token));
  return out;
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(values[i]);
  }
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw FormatError("expected true or false, got '" + std::string(v) + "'");
}

int parse_int(std::string_view v) {
  const long long x = parse_integer(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw FormatError("integer out of range: " + std::string(v));
  }
  return static_cast<int>(x);
}

std::string_view initial_name(InitialCondition::Kind k) {
  switch (k) {
    case InitialCondition::Kind::zero:
      return "zero";
    case InitialCondition::Kind::coefficients:
      return "coefficients";
    case InitialCondition::Kind::warm:
      return "warm";
  }
  return "zero";
}

InitialCondition::Kind parse_initial(std::string_view v) {
  if (v == "zero") return InitialCondition::Kind::zero;
  if (v == "coefficients") return InitialCondition::Kind::coefficients;
  if (v == "warm") return InitialCondition::Kind::warm;
  throw FormatError("initial condition must be zero, coefficients or warm, got '" + std::string(v) + "'");
}

KsSigmaSource parse_ks_source(std::string_view v) {
  if (v == "derived") return KsSigmaSource::derived;
  if (v == "empirical") return KsSigmaSource::empirical;
  throw FormatError("KS sigma source must be derived or empirical, got '" + std::string(v) + "'");
}

#define DOUBLE_FIELD(path)                                                            \
  Field {                                                                             \
    [](ExperimentConfig& c, std::string_view v) { c.path = parse_double(v); },       \
        [](const ExperimentConfig& c) { return format_double(c.path); }               \
  }
#define INT_FIELD(path)                                                            \
  Field {                                                                          \
    [](ExperimentConfig& c, std::string_view v) { c.path = parse_int(v); },        \
        [](const ExperimentConfig& c) { return std::to_string(c.path); }           \
  }
#define LIST_FIELD(path)                                                           \
  Field {                                                                          \
    [](ExperimentConfig& c, std::string_view v) { c.path = parse_list(v); },       \
        [](const ExperimentConfig& c) { return format_list(c.path); }              \
  }

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"geometry.a", DOUBLE_FIELD(geometry.period)},
      {"geometry.K", INT_FIELD(geometry.max_wavenumber)},
      {"geometry.M", INT_FIELD(geometry.wall_order)},
      {"geometry.J", INT_FIELD(geometry.modes)},
      {"geometry.N1", INT_FIELD(geometry.grid_x1)},
      {"geometry.N2", INT_FIELD(geometry.grid_x2)},
      {"noise.rule",
       {[](ExperimentConfig& c, std::string_view v) {
          try {
            c.noise_rule = parse_noise_rule(v);
          } catch (const Error& e) {
            throw FormatError(e.what());
          }
        },
        [](const ExperimentConfig& c) { return std::string(to_string(c.noise_rule)); }}},
      {"noise.params", LIST_FIELD(noise_params)},
      {"dynamics.nu", DOUBLE_FIELD(dynamics.nu)},
      {"dynamics.dt", DOUBLE_FIELD(dynamics.dt)},
      {"dynamics.T", DOUBLE_FIELD(dynamics.horizon)},
      {"dynamics.linear_only",
       {[](ExperimentConfig& c, std::string_view v) { c.dynamics.linear_only = parse_bool(v); },
        [](const ExperimentConfig& c) { return std::string(c.dynamics.linear_only ? "true" : "false"); }}},
      {"dynamics.initial",
       {[](ExperimentConfig& c, std::string_view v) { c.dynamics.initial.kind = parse_initial(v); },
        [](const ExperimentConfig& c) { return std::string(initial_name(c.dynamics.initial.kind)); }}},
      {"dynamics.coefficients", LIST_FIELD(dynamics.initial.coefficients)},
      {"dynamics.warmup", DOUBLE_FIELD(dynamics.initial.warmup)},
      {"dynamics.output_stride", INT_FIELD(dynamics.output_stride)},
      {"dynamics.noise_substeps", INT_FIELD(dynamics.noise_substeps)},
      {"ensemble.R", INT_FIELD(ensemble.runs)},
      {"ensemble.seed",
       {[](ExperimentConfig& c, std::string_view v) {
          const long long x = parse_integer(v);
          if (x < 0) throw FormatError("seed must be >= 0");
          c.ensemble.seed = static_cast<std::uint64_t>(x);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.ensemble.seed); }}},
      {"ensemble.checkpoints", LIST_FIELD(ensemble.checkpoints)},
      {"analysis.rho", LIST_FIELD(analysis.rho)},
      {"analysis.kappa_nu", DOUBLE_FIELD(analysis.kappa_nu)},
      {"analysis.burn_in_checkpoints", DOUBLE_FIELD(analysis.burn_in_checkpoints)},
      {"analysis.burn_in_horizon", DOUBLE_FIELD(analysis.burn_in_horizon)},
      {"analysis.ks_sigma",
       {[](ExperimentConfig& c, std::string_view v) { c.analysis.ks_sigma = parse_ks_source(v); },
        [](const ExperimentConfig& c) {
          return std::string(c.analysis.ks_sigma == KsSigmaSource::derived ? "derived" : "empirical");
        }}},
      {"analysis.ks_threshold", DOUBLE_FIELD(analysis.ks_threshold)},
      {"analysis.sigma_run_T", DOUBLE_FIELD(analysis.sigma_run_horizon)},
      {"analysis.normality_t", DOUBLE_FIELD(analysis.normality_time)},
      {"analysis.qv_n", INT_FIELD(analysis.qv_count)},
      {"analysis.moment_times", LIST_FIELD(analysis.moment_times)},
      {"output.dir",
       {[](ExperimentConfig& c, std::string_view v) { c.output_dir = std::string(v); },
        [](const ExperimentConfig& c) { return c.output_dir; }, false}},
  };
  return table;
}

#undef DOUBLE_FIELD
#undef INT_FIELD
#undef LIST_FIELD

bool multiple_of(double t, double dt) {
  const double ratio = t / dt;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
}

bool contains_time(const std::vector<double>& times, double t) {
  return std::any_of(times.begin(), times.end(),
                     [&](double x) { return std::abs(x - t) <= 1e-9 * std::max(1.0, std::abs(t)); });
}

bool increasing(const std::vector<double>& v) { return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end(); }

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, field] : fields()) {
    if (!field.hashed) continue;
    out += key;
    out += " = ";
    out += field.get(*this);
    out += '\n';
  }
  return out;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical()); }

std::vector<ConfigIssue> validate_config(const ExperimentConfig& c) {
  std::vector<ConfigIssue> issues;
  auto add = [&](std::string key, std::string message, bool standing = false) {
    issues.push_back({0, std::move(key), std::move(message), standing});
  };

  try {
    c.geometry.resolved().validate();
  } catch (const Error& e) {
    add("geometry", e.what());
  }

  const auto& d = c.dynamics;
  if (!(d.nu > 0.0)) add("dynamics.nu", "viscosity must be > 0");
  if (!(d.dt > 0.0)) add("dynamics.dt", "time step must be > 0");
  if (!(d.horizon >= 0.0)) add("dynamics.T", "horizon must be >= 0");
  if (d.dt > 0.0 && d.horizon > 0.0 && d.dt <= d.horizon && !multiple_of(d.horizon, d.dt)) {
    add("dynamics.T / dynamics.dt", "T = " + format_double(d.horizon) + " is not a multiple of dt = " + format_double(d.dt));
  }
  if (d.output_stride < 1) add("dynamics.output_stride", "must be >= 1");
  if (d.noise_substeps < 1) add("dynamics.noise_substeps", "must be >= 1");
  const auto J = static_cast<std::size_t>(std::max(c.geometry.modes, 0));
  if (d.initial.kind == InitialCondition::Kind::coefficients && d.initial.coefficients.size() != J) {
    add("dynamics.coefficients / geometry.J", std::to_string(d.initial.coefficients.size()) +
                                                  " coefficients given but geometry.J = " + std::to_string(J));
  }
  if (d.initial.kind != InitialCondition::Kind::coefficients && !d.initial.coefficients.empty()) {
    add("dynamics.coefficients / dynamics.initial", "coefficients are only used with dynamics.initial = coefficients");
  }
  if (d.initial.kind == InitialCondition::Kind::warm) {
    if (!(d.initial.warmup >= 0.0)) {
      add("dynamics.warmup", "must be >= 0");
    } else if (d.dt > 0.0 && !multiple_of(d.initial.warmup, d.dt)) {
      add("dynamics.warmup / dynamics.dt", "warm-up is not a multiple of dt");
    }
  }

  const auto& p = c.noise_params;
  const std::string standing = "standing assumption violated: B = sum_j b_j^2 must be finite and strictly positive";
  switch (c.noise_rule) {
    case NoiseRule::explicit_list: {
      if (p.size() != J) {
        add("noise.params / geometry.J",
            std::to_string(p.size()) + " amplitudes given but geometry.J = " + std::to_string(J));
      }
      if (std::any_of(p.begin(), p.end(), [](double b) { return !(b >= 0.0) || !std::isfinite(b); })) {
        add("noise.params", "amplitudes must be finite and >= 0");
      } else if (std::all_of(p.begin(), p.end(), [](double b) { return b == 0.0; })) {
        add("noise.params", standing, true);
      }
      break;
    }
    case NoiseRule::power_law:
      if (p.size() != 2) {
        add("noise.params", "power_law takes {c, r}");
      } else {
        if (p[0] == 0.0) add("noise.params", standing, true);
        else if (!(p[0] > 0.0) || !std::isfinite(p[0])) add("noise.params", "power_law c must be finite and > 0");
        if (!std::isfinite(p[1])) add("noise.params", "power_law r must be finite");
      }
      break;
    case NoiseRule::flat:
      if (p.size() != 2) {
        add("noise.params", "flat takes {c, J'}");
      } else {
        if (p[0] == 0.0) add("noise.params", standing, true);
        else if (!(p[0] > 0.0) || !std::isfinite(p[0])) add("noise.params", "flat c must be finite and > 0");
        if (p[1] != std::floor(p[1]) || p[1] < 1.0) {
          add("noise.params", "flat J' must be a positive integer");
        } else if (p[1] > static_cast<double>(J)) {
          add("noise.params / geometry.J", "flat J' = " + format_double(p[1]) + " exceeds geometry.J = " + std::to_string(J));
        }
      }
      break;
  }

  const auto& e = c.ensemble;
  if (e.runs < 1) add("ensemble.R", "must be >= 1");
  if (!increasing(e.checkpoints) || (!e.checkpoints.empty() && !(e.checkpoints.front() > 0.0))) {
    add("ensemble.checkpoints", "must be positive and strictly increasing");
  }
  for (double t : e.checkpoints) {
    if (t > d.horizon * (1.0 + 1e-12)) {
      add("ensemble.checkpoints / dynamics.T", "checkpoint " + format_double(t) + " exceeds T = " + format_double(d.horizon));
    } else if (d.dt > 0.0 && !multiple_of(t, d.dt)) {
      add("ensemble.checkpoints / dynamics.dt", "checkpoint " + format_double(t) + " is not a multiple of dt");
    }
  }

  const auto& a = c.analysis;
  if (!increasing(a.rho) || (!a.rho.empty() && a.rho.front() < 0.0)) {
    add("analysis.rho", "must be non-negative and strictly increasing");
  }
  if (!(a.kappa_nu >= 0.0) || !std::isfinite(a.kappa_nu)) add("analysis.kappa_nu", "must be >= 0 (0 selects the default)");
  if (!(a.burn_in_checkpoints >= 0.0 && a.burn_in_checkpoints < 1.0)) add("analysis.burn_in_checkpoints", "must be in [0, 1)");
  if (!(a.burn_in_horizon >= 0.0 && a.burn_in_horizon < 1.0)) add("analysis.burn_in_horizon", "must be in [0, 1)");
  if (!(a.ks_threshold > 0.0 && a.ks_threshold <= 1.0)) add("analysis.ks_threshold", "must be in (0, 1]");
  if (!(a.sigma_run_horizon > 0.0)) {
    add("analysis.sigma_run_T", "must be > 0");
  } else if (d.dt > 0.0 && !multiple_of(a.sigma_run_horizon, d.dt)) {
    add("analysis.sigma_run_T / dynamics.dt", "long-run horizon is not a multiple of dt");
  }
  if (a.normality_time != 0.0 && !contains_time(e.checkpoints, a.normality_time)) {
    add("analysis.normality_t / ensemble.checkpoints", "normality time " + format_double(a.normality_time) +
                                                           " is not an ensemble checkpoint");
  }
  if (a.qv_count < 1) {
    add("analysis.qv_n", "must be >= 1");
  } else if (a.qv_count > a.sigma_run_horizon) {
    add("analysis.qv_n / analysis.sigma_run_T", "qv_n = " + std::to_string(a.qv_count) + " exceeds the long-run horizon");
  }
  for (double t : a.moment_times) {
    if (!contains_time(e.checkpoints, t)) {
      add("analysis.moment_times / ensemble.checkpoints", "moment time " + format_double(t) + " is not an ensemble checkpoint");
    }
  }
  return issues;
}

ParseResult parse_config(std::string_view text) {
  ParseResult result;
  ExperimentConfig config;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      result.issues.push_back({line_no, "", "expected 'section.key = value'"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto field = fields().find(key);
    if (field == fields().end()) {
      result.issues.push_back({line_no, key, "unknown key"});
      continue;
    }
    if (const auto prev = seen.find(key); prev != seen.end()) {
      result.issues.push_back(
          {line_no, key, "duplicate key (first set on line " + std::to_string(prev->second) + ")"});
      continue;
    }
    seen.emplace(key, line_no);
    try {
      field->second.set(config, value);
    } catch (const Error& e) {
      result.issues.push_back({line_no, key, e.what()});
    }
  }
  if (!result.issues.empty()) return result;
  result.issues = validate_config(config);
  if (result.issues.empty()) result.config = std::move(config);
  return result;
}

NoiseSpec build_noise(const ExperimentConfig& config, std::span<const double> alphas) {
  return make_noise_spec(config.noise_rule, config.noise_params, alphas);
}

}  // namespace viscest::cli
