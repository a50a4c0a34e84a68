#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tunnel/cli/config.hpp"

namespace tunnel::cli {

using Json = nlohmann::json;

/// Everything a subcommand reports. Serialized with sorted keys; only the
/// "timestamp" key varies between identical runs.
struct RunSummary {
  Command command = Command::transmission;
  Json config;   // echo with defaults filled
  Json results;  // headline scalars
  std::vector<std::string> files;  // names relative to the output directory
  std::vector<std::string> warnings;
  double wall_clock_s = 0.0;
  std::string started_utc;
};

/// Shortest decimal that round-trips; nan and inf spelled out.
std::string format_number(double v);

/// Header line plus rows, comma separated, '\n' line ends.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Two whitespace-separated columns for gnuplot, with '#' comment lines first.
void write_columns(const std::filesystem::path& path, const std::vector<std::string>& comments,
                   const std::vector<double>& a, const std::vector<double>& b);

Json config_to_json(const ExperimentConfig& cfg);

Json summary_to_json(const RunSummary& summary);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_now();

}  // namespace tunnel::cli
