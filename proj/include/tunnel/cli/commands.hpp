#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "tunnel/cli/config.hpp"
#include "tunnel/cli/output.hpp"

namespace tunnel::cli {

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_numerical = 2, exit_warnings = 3 };

RunSummary run_transmission(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
RunSummary run_packet(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
RunSummary run_estimate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
RunSummary run_times(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
RunSummary run_check_uncertainty(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Validates, dispatches, writes <name>.json and returns the summary.
RunSummary run(Command command, const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out_dir;  // else TUNNEL_OUT_DIR, else "."
  std::optional<std::uint64_t> seed;            // overrides [run] seed
  bool quiet = false;
};

std::filesystem::path resolve_out_dir(const CommandOptions& opts);

/// Reads the config, runs the command, reports on out/err and returns the
/// exit code. Never throws.
int execute(Command command, const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace tunnel::cli
