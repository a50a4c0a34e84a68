#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunnel/errors.hpp"
#include "tunnel/transfer_matrix.hpp"

namespace tunnel::cli {

enum class Command { transmission, packet, estimate, times, check_uncertainty };

std::string_view command_name(Command c);
std::optional<Command> command_from_name(std::string_view name);

/// Parse or validation failure. line is 0 when the error is not tied to a
/// single line (e.g. a missing required key).
class ConfigError : public ValidationError {
 public:
  ConfigError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Every recognised key; anything not set keeps the default listed in
/// docs/config.md.
struct ExperimentConfig {
  std::optional<Command> experiment;  // [run] experiment, must match the subcommand

  // [material]
  double mass_ratio = 1.0;

  // [barrier]
  std::optional<double> v0;
  std::optional<double> d;
  double lead = 0.0;
  std::optional<std::vector<Segment>> segments;

  // [sweep]
  std::optional<double> e_min;
  std::optional<double> e_max;
  std::size_t sweep_n = 512;
  std::size_t resonances = 5;

  // [packet]
  std::optional<double> x0;
  std::optional<double> sigma_x;
  std::optional<double> e0;

  // [grid]
  std::optional<double> grid_x_min;
  std::optional<double> grid_x_max;
  std::optional<std::size_t> grid_n_points;

  // [time]
  std::optional<double> dt;
  std::optional<double> t_max;
  double record_interval = 0.02;
  double settle_rate = 1e-4;
  double post_settle = 1.0;
  std::vector<double> snapshots;

  // [estimate]
  std::optional<double> delta_x;

  // [times]
  std::optional<double> energy;
  double de = 0.0;
  bool times_packet = false;

  // [uncertainty]
  std::vector<std::string> states{"gaussian"};
  std::size_t n_random = 100;
  double u_x_min = -15.0;
  double u_x_max = 15.0;
  std::size_t u_n_points = 1501;
  double u_sigma_x = 1.0;
  double u_x0 = 0.0;
  double u_e0 = 0.01;
  std::size_t ensemble_samples = 0;

  // [output]
  std::optional<std::string> name;

  // [run]
  std::uint64_t seed = 0;
};

/// key = value lines, # comments, [section] headers. Unknown sections or
/// keys, duplicates and malformed values are errors carrying the line.
ExperimentConfig parse_config(std::string_view text);

/// Checks everything the given command needs before any computation.
void validate_for(const ExperimentConfig& cfg, Command command);

/// The profile described by [barrier] and [material].
PotentialProfile make_profile(const ExperimentConfig& cfg);

/// Multi-line help text listing sections, keys and defaults.
std::string config_reference();

}  // namespace tunnel::cli
