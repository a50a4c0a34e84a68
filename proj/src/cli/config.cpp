#include "tunnel/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tunnel::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view v, std::size_t line, std::string_view key) {
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
    throw ConfigError(line, "'" + std::string(key) + "' expects a finite number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_u64(std::string_view v, std::size_t line, std::string_view key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(line, "'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t to_size(std::string_view v, std::size_t line, std::string_view key) {
  return static_cast<std::size_t>(to_u64(v, line, key));
}

bool to_bool(std::string_view v, std::size_t line, std::string_view key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(line, "'" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'");
}

std::vector<double> to_list(std::string_view v, std::size_t line, std::string_view key) {
  std::vector<double> out;
  for (auto item : split(v, ',')) out.push_back(to_double(item, line, key));
  return out;
}

std::vector<Segment> to_segments(std::string_view v, std::size_t line) {
  std::vector<Segment> out;
  for (auto item : split(v, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) {
      throw ConfigError(line, "'segments' entries are width:height, got '" + std::string(item) + "'");
    }
    out.push_back({to_double(parts[0], line, "segments"), to_double(parts[1], line, "segments")});
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::size_t)>;

struct KeySpec {
  const char* section;
  const char* key;
  const char* help;
  Setter set;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"run", "experiment", "transmission | packet | estimate | times | check-uncertainty; optional, must match the subcommand",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         const auto cmd = command_from_name(v);
         if (!cmd) throw ConfigError(l, "unknown experiment '" + std::string(v) + "'");
         c.experiment = cmd;
       }},
      {"run", "seed", "u64, default 0 (--seed overrides)",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.seed = to_u64(v, l, "seed"); }},
      {"material", "mass_ratio", "m*/m_e, default 1.0",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.mass_ratio = to_double(v, l, "mass_ratio"); }},
      {"barrier", "v0", "eV, single barrier height",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.v0 = to_double(v, l, "v0"); }},
      {"barrier", "d", "nm, single barrier width; 0 gives an empty profile",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.d = to_double(v, l, "d"); }},
      {"barrier", "lead", "eV, lead potential, default 0",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.lead = to_double(v, l, "lead"); }},
      {"barrier", "segments", "width:height list, e.g. 1:0.5, 4:0, 1:0.5 (replaces v0/d)",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.segments = to_segments(v, l); }},
      {"sweep", "e_min", "eV",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.e_min = to_double(v, l, "e_min"); }},
      {"sweep", "e_max", "eV",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.e_max = to_double(v, l, "e_max"); }},
      {"sweep", "n", "number of energies, default 512",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.sweep_n = to_size(v, l, "n"); }},
      {"sweep", "resonances", "resonances to list in the summary, default 5",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.resonances = to_size(v, l, "resonances"); }},
      {"packet", "x0", "nm, initial centre",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.x0 = to_double(v, l, "x0"); }},
      {"packet", "sigma_x", "nm, position standard deviation",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.sigma_x = to_double(v, l, "sigma_x"); }},
      {"packet", "e0", "eV, central kinetic energy",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.e0 = to_double(v, l, "e0"); }},
      {"grid", "x_min", "nm; x_min, x_max, n_points override the automatic grid together",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.grid_x_min = to_double(v, l, "x_min"); }},
      {"grid", "x_max", "nm",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.grid_x_max = to_double(v, l, "x_max"); }},
      {"grid", "n_points", "grid points",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.grid_n_points = to_size(v, l, "n_points"); }},
      {"time", "dt", "fs, default from the resolution rule",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.dt = to_double(v, l, "dt"); }},
      {"time", "t_max", "fs, hard stop, default from the resolution rule",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.t_max = to_double(v, l, "t_max"); }},
      {"time", "record_interval", "fs between series rows, default 0.02",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.record_interval = to_double(v, l, "record_interval"); }},
      {"time", "settle_rate", "1/fs, default 1e-4",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.settle_rate = to_double(v, l, "settle_rate"); }},
      {"time", "post_settle", "fs to keep running after settling, default 1",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.post_settle = to_double(v, l, "post_settle"); }},
      {"time", "snapshots", "fs list of |psi|^2 snapshot times, default none",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.snapshots = to_list(v, l, "snapshots"); }},
      {"estimate", "delta_x", "nm, position uncertainty",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.delta_x = to_double(v, l, "delta_x"); }},
      {"times", "energy", "eV",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.energy = to_double(v, l, "energy"); }},
      {"times", "de", "eV, phase-time step, default 0 (automatic 1e-4 * energy)",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.de = to_double(v, l, "de"); }},
      {"times", "packet", "true to add the packet transit time from a [packet] run, default false",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.times_packet = to_bool(v, l, "packet"); }},
      {"uncertainty", "states", "list of gaussian | random, default gaussian",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         c.states.clear();
         for (auto s : split(v, ',')) {
           if (s != "gaussian" && s != "random") throw ConfigError(l, "unknown state '" + std::string(s) + "'");
           c.states.emplace_back(s);
         }
       }},
      {"uncertainty", "n_random", "random states per 'random' entry, default 100",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.n_random = to_size(v, l, "n_random"); }},
      {"uncertainty", "x_min", "nm, default -15",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.u_x_min = to_double(v, l, "x_min"); }},
      {"uncertainty", "x_max", "nm, default 15",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.u_x_max = to_double(v, l, "x_max"); }},
      {"uncertainty", "n_points", "default 1501",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.u_n_points = to_size(v, l, "n_points"); }},
      {"uncertainty", "sigma_x", "nm, Gaussian width, default 1",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.u_sigma_x = to_double(v, l, "sigma_x"); }},
      {"uncertainty", "x0", "nm, Gaussian centre, default 0",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.u_x0 = to_double(v, l, "x0"); }},
      {"uncertainty", "e0", "eV, Gaussian kinetic energy, default 0.01",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.u_e0 = to_double(v, l, "e0"); }},
      {"uncertainty", "ensemble_samples", "0 (off) or >= 100 samples per observable",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) { c.ensemble_samples = to_size(v, l, "ensemble_samples"); }},
      {"output", "name", "file name stem, default the subcommand name",
       [](ExperimentConfig& c, std::string_view v, std::size_t l) {
         if (v.empty() || v.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") != std::string_view::npos) {
           throw ConfigError(l, "'name' may contain only letters, digits, '_', '.', '-'");
         }
         c.name = std::string(v);
       }},
  };
  return table;
}

[[noreturn]] void missing(const char* section, const char* key, const char* why) {
  throw ConfigError(0, std::string("[") + section + "] " + key + " is required: " + why);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ConfigError(0, std::string(what) + " must be positive");
}

}  // namespace

std::string_view command_name(Command c) {
  switch (c) {
    case Command::transmission: return "transmission";
    case Command::packet: return "packet";
    case Command::estimate: return "estimate";
    case Command::times: return "times";
    case Command::check_uncertainty: return "check-uncertainty";
  }
  return "";
}

std::optional<Command> command_from_name(std::string_view name) {
  for (auto c : {Command::transmission, Command::packet, Command::estimate, Command::times,
                 Command::check_uncertainty}) {
    if (command_name(c) == name) return c;
  }
  return std::nullopt;
}

ConfigError::ConfigError(std::size_t line, const std::string& message)
    : ValidationError(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::string section;
  std::set<std::string> known_sections;
  for (const auto& k : key_table()) known_sections.insert(k.section);
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_sections.contains(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_no, "key '" + key + "' appears before any [section]");
    const auto& table = key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const KeySpec& k) {
      return section == k.section && key == k.key;
    });
    if (it == table.end()) throw ConfigError(line_no, "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (const auto prev = seen.find(full); prev != seen.end()) {
      throw ConfigError(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    }
    seen[full] = line_no;
    it->set(cfg, value, line_no);
  }
  return cfg;
}

PotentialProfile make_profile(const ExperimentConfig& cfg) {
  PotentialProfile p;
  p.mass = EffectiveMass(cfg.mass_ratio);
  p.lead_height = cfg.lead;
  if (cfg.segments) {
    if (cfg.v0 || cfg.d) throw ConfigError(0, "[barrier] give either segments or v0/d, not both");
    p.segments = *cfg.segments;
  } else {
    if (!cfg.d) missing("barrier", "d", "barrier width (0 for an empty profile)");
    if (*cfg.d < 0.0) throw ConfigError(0, "[barrier] d must be >= 0");
    if (*cfg.d > 0.0) {
      if (!cfg.v0) missing("barrier", "v0", "barrier height");
      p.segments = {{*cfg.d, *cfg.v0}};
    }
  }
  validate_profile(p);
  return p;
}

void validate_for(const ExperimentConfig& cfg, Command command) {
  if (cfg.experiment && *cfg.experiment != command) {
    throw ConfigError(0, "config is for '" + std::string(command_name(*cfg.experiment)) +
                             "' but the subcommand is '" + std::string(command_name(command)) + "'");
  }
  if (!(cfg.mass_ratio > 0.0)) throw ConfigError(0, "[material] mass_ratio must be positive");
  switch (command) {
    case Command::transmission: {
      const auto p = make_profile(cfg);
      if (!cfg.e_min) missing("sweep", "e_min", "lowest energy");
      if (!cfg.e_max) missing("sweep", "e_max", "highest energy");
      if (!(*cfg.e_min > p.lead_height)) throw ConfigError(0, "[sweep] e_min must exceed the lead height");
      if (!(*cfg.e_max > *cfg.e_min)) throw ConfigError(0, "[sweep] e_max must exceed e_min");
      if (cfg.sweep_n < 2) throw ConfigError(0, "[sweep] n must be at least 2");
      break;
    }
    case Command::packet: {
      const auto p = make_profile(cfg);
      if (!cfg.x0) missing("packet", "x0", "initial centre");
      if (!cfg.sigma_x) missing("packet", "sigma_x", "packet width");
      if (!cfg.e0) missing("packet", "e0", "central energy");
      require_positive(*cfg.sigma_x, "[packet] sigma_x");
      require_positive(*cfg.e0, "[packet] e0");
      if (p.lead_height != 0.0) throw ConfigError(0, "packet runs need lead = 0");
      const int grid_keys = !!cfg.grid_x_min + !!cfg.grid_x_max + !!cfg.grid_n_points;
      if (grid_keys != 0 && grid_keys != 3) {
        throw ConfigError(0, "[grid] x_min, x_max and n_points must be given together");
      }
      if (grid_keys == 3) make_grid(*cfg.grid_x_min, *cfg.grid_x_max, *cfg.grid_n_points);
      if (cfg.dt) require_positive(*cfg.dt, "[time] dt");
      if (cfg.t_max) require_positive(*cfg.t_max, "[time] t_max");
      require_positive(cfg.record_interval, "[time] record_interval");
      require_positive(cfg.settle_rate, "[time] settle_rate");
      if (cfg.post_settle < 0.0) throw ConfigError(0, "[time] post_settle must be >= 0");
      for (double t : cfg.snapshots) {
        if (t < 0.0) throw ConfigError(0, "[time] snapshots must be >= 0");
      }
      break;
    }
    case Command::estimate:
      if (!cfg.delta_x) missing("estimate", "delta_x", "position uncertainty");
      require_positive(*cfg.delta_x, "[estimate] delta_x");
      break;
    case Command::times: {
      const auto p = make_profile(cfg);
      if (!cfg.energy) missing("times", "energy", "energy of the stationary state");
      if (!(*cfg.energy > p.lead_height)) throw ConfigError(0, "[times] energy must exceed the lead height");
      if (cfg.de < 0.0) throw ConfigError(0, "[times] de must be >= 0");
      if (!cfg.delta_x) missing("estimate", "delta_x", "needed for hbar / dE");
      require_positive(*cfg.delta_x, "[estimate] delta_x");
      if (cfg.times_packet) validate_for([&] {
          auto c = cfg;
          c.experiment.reset();
          return c;
        }(), Command::packet);
      break;
    }
    case Command::check_uncertainty:
      make_grid(cfg.u_x_min, cfg.u_x_max, cfg.u_n_points);
      if (cfg.states.empty()) throw ConfigError(0, "[uncertainty] states must not be empty");
      if (cfg.n_random == 0) throw ConfigError(0, "[uncertainty] n_random must be positive");
      require_positive(cfg.u_sigma_x, "[uncertainty] sigma_x");
      require_positive(cfg.u_e0, "[uncertainty] e0");
      if (cfg.ensemble_samples != 0 && cfg.ensemble_samples < 100) {
        throw ConfigError(0, "[uncertainty] ensemble_samples must be 0 or at least 100");
      }
      if (cfg.ensemble_samples != 0 && cfg.u_n_points > 2048) {
        throw ConfigError(0, "[uncertainty] ensemble sampling needs n_points <= 2048");
      }
      break;
  }
}

std::string config_reference() {
  std::ostringstream os;
  os << "Config file: key = value lines grouped under [section] headers; '#' starts a comment.\n";
  std::string section;
  for (const auto& k : key_table()) {
    if (section != k.section) {
      section = k.section;
      os << "\n[" << section << "]\n";
    }
    os << "  " << k.key << ": " << k.help << "\n";
  }
  return os.str();
}

}  // namespace tunnel::cli
