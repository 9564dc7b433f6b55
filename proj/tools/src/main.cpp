#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "viscest/text_format.hpp"
#include "viscest_cli/commands.hpp"
#include "viscest_cli/config.hpp"

namespace {

using namespace viscest::cli;

int config_error(const std::string& message, const std::vector<ConfigIssue>& issues = {}) {
  std::cerr << error_block("config", kExitConfig, message, issues) << '\n';
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Viscosity estimation for stochastic channel flow"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> out_dir;
  RunFlags flags;

  app.add_option("--config", config_path, "Experiment config file (section.key = value)")->required();
  app.add_option("--seed", seed, "Override ensemble.seed");
  app.add_option("--runs", runs, "Override ensemble.R");
  app.add_option("--out", out_dir, "Override output.dir (also VISCEST_OUT_DIR)");

  const char* names[] = {"basis", "simulate", "estimate", "mc-consistency", "mc-normality", "validate", "report"};
  const char* help[] = {"Build or load the Stokes eigenbasis and print its eigenvalues",
                        "Run one trajectory; write checkpoint and time series",
                        "Print nu_hat, xi and the energy residual at T",
                        "Ensemble consistency rate, supermartingale and moment diagnostics",
                        "Ensemble asymptotic normality and quadratic-variation LLN",
                        "Run the oracle suite",
                        "Aggregate previous outputs"};
  for (int i = 0; i < 7; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    if (std::string_view(names[i]) == "simulate") {
      sub->add_flag("--resume", flags.resume, "Continue from the checkpoint in the output directory");
      sub->add_option("--stop-at", flags.stop_at, "Stop once t reaches this value");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << error_block("usage", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  }

  std::ifstream in(config_path);
  if (!in) return config_error("cannot read config file '" + config_path + "'");
  std::stringstream text;
  text << in.rdbuf();

  ParseResult parsed = parse_config(text.str());
  if (!parsed.ok()) return config_error("invalid config " + config_path, parsed.issues);
  ExperimentConfig config = *parsed.config;

  if (const char* env = std::getenv("VISCEST_OUT_DIR"); env != nullptr && *env != '\0') config.output_dir = env;
  if (out_dir) config.output_dir = *out_dir;
  if (seed) config.ensemble.seed = *seed;
  if (runs) config.ensemble.runs = *runs;
  if (const char* env = std::getenv("VISCEST_THREADS"); env != nullptr && *env != '\0') {
    try {
      flags.threads = static_cast<int>(viscest::parse_integer(env));
    } catch (const std::exception&) {
      return config_error("VISCEST_THREADS must be an integer");
    }
  }
  if (auto issues = validate_config(config); !issues.empty()) {
    return config_error("invalid configuration after command-line overrides", issues);
  }

  std::string name;
  for (auto* sub : app.get_subcommands()) name = sub->get_name();
  return run_subcommand(name, config, flags, std::cout, std::cerr);
}
