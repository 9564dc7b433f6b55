#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "viscest_cli/config.hpp"

namespace viscest::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

/// Stream index of the long stationary run behind sigma_M; ensemble runs use 0..R-1.
inline constexpr std::uint32_t kLongRunStream = 0xffffffffu;

struct RunFlags {
  bool resume = false;                  // simulate: continue from the checkpoint
  std::optional<double> stop_at;        // simulate: stop once t reaches this value
  int threads = 0;                      // ensemble workers, 0 = hardware concurrency
};

/// Subcommands: basis, simulate, estimate, mc-consistency, mc-normality, validate, report.
/// Human-readable progress goes to `out`; failures produce a JSON error block on `err`.
int run_subcommand(std::string_view name, const ExperimentConfig& config, const RunFlags& flags, std::ostream& out,
                   std::ostream& err);

/// {"error": {"kind", "exit_code", "message", "issues": [...]}}
std::string error_block(std::string_view kind, int exit_code, std::string_view message,
                        const std::vector<ConfigIssue>& issues = {});

}  // namespace viscest::cli
