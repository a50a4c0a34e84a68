#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tunnel/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace tunnel::cli;

  CLI::App app{"1-D tunneling toolkit: transmission sweeps, wave packets, tunneling times, uncertainty checks"};
  app.footer(config_reference() + "\nOutput directory: --out-dir, else $TUNNEL_OUT_DIR, else the current directory.\n"
             "Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 success with warnings.");
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;

  const std::pair<Command, const char*> commands[] = {
      {Command::transmission, "T(E) sweep over [sweep] e_min..e_max"},
      {Command::packet, "Crank-Nicolson wave packet against the barrier"},
      {Command::estimate, "uncertainty-chain estimate from [estimate] delta_x"},
      {Command::times, "phase, dwell and packet times against hbar/dE"},
      {Command::check_uncertainty, "Robertson check for x and p on configured states"},
  };
  for (const auto& [cmd, help] : commands) {
    auto* sub = app.add_subcommand(std::string(command_name(cmd)), help);
    sub->add_option("--config", config, "config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--seed", seed, "seed, overrides [run] seed");
    sub->add_flag("--quiet", quiet, "no summary on stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

  for (auto* sub : app.get_subcommands()) {
    CommandOptions opts;
    opts.config_path = config;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    if (sub->count("--seed") > 0) opts.seed = seed;
    opts.quiet = quiet;
    return execute(*command_from_name(sub->get_name()), opts, std::cout, std::cerr);
  }
  return exit_validation;
}
