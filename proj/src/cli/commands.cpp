#include "tunnel/cli/commands.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "tunnel/errors.hpp"
#include "tunnel/timing.hpp"
#include "tunnel/uncertainty.hpp"
#include "tunnel/wavepacket.hpp"

namespace tunnel::cli {

namespace fs = std::filesystem;

namespace {

std::string stem(const ExperimentConfig& cfg, Command command) {
  return cfg.name ? *cfg.name : std::string(command_name(command));
}

RunSummary start(Command command, const ExperimentConfig& cfg) {
  RunSummary s;
  s.command = command;
  s.config = config_to_json(cfg);
  return s;
}

Json profile_json(const PotentialProfile& p) {
  Json segs = Json::array();
  for (const auto& s : p.segments) segs.push_back({{"width", s.width}, {"height", s.height}});
  return {{"segments", segs},
          {"lead_height", p.lead_height},
          {"mass_ratio", p.mass.ratio},
          {"total_width", p.total_width()},
          {"max_height", p.max_height()}};
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from, const std::string& prefix = "") {
  for (const auto& w : from) to.push_back(prefix + w);
}

// Refined local maxima of T over the sweep, ascending in energy.
std::vector<std::pair<double, double>> sweep_peaks(const PotentialProfile& p, const std::vector<SweepRow>& rows,
                                                   std::size_t limit) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 1; i + 1 < rows.size() && out.size() < limit; ++i) {
    if (!rows[i - 1].ok() || !rows[i].ok() || !rows[i + 1].ok()) continue;
    const double t = rows[i].result->t_prob;
    if (!(t > rows[i - 1].result->t_prob && t >= rows[i + 1].result->t_prob)) continue;
    auto neg_t = [&p](double e) { return -solve(p, e).transmission.t_prob; };
    const auto [e, v] = boost::math::tools::brent_find_minima(neg_t, rows[i - 1].energy, rows[i + 1].energy,
                                                              std::numeric_limits<double>::digits / 2);
    out.emplace_back(e, -v);
  }
  return out;
}

std::pair<WavePacketSpec, RunSettings> packet_settings(const ExperimentConfig& cfg, const PotentialProfile& p) {
  const WavePacketSpec spec{*cfg.x0, *cfg.sigma_x, *cfg.e0, p.mass};
  RunSettings run = suggest_run_settings(spec, p);
  if (cfg.grid_n_points) run.grid = make_grid(*cfg.grid_x_min, *cfg.grid_x_max, *cfg.grid_n_points);
  if (cfg.dt) run.dt = *cfg.dt;
  if (cfg.t_max) run.t_max = *cfg.t_max;
  run.record_interval = std::max(cfg.record_interval, run.dt);
  run.settle_rate = cfg.settle_rate;
  run.post_settle_time = cfg.post_settle;
  run.snapshot_times = cfg.snapshots;
  return {spec, run};
}

Json settings_json(const RunSettings& r) {
  return {{"x_min", r.grid.x_min()},
          {"x_max", r.grid.x_max()},
          {"n_points", r.grid.size()},
          {"dx", r.grid.dx()},
          {"dt", r.dt},
          {"t_max", r.t_max},
          {"record_interval", r.record_interval},
          {"settle_rate", r.settle_rate},
          {"post_settle", r.post_settle_time}};
}

Json transit_json(const TransitResult& t) {
  return {{"value_fs", t.value},
          {"t_in_fs", t.t_in},
          {"t_out_fs", t.t_out},
          {"reliable", t.reliable},
          {"reason", t.reason}};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

void print_scalars(std::ostream& out, const Json& j, const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      print_scalars(out, value, prefix + key + ".");
    } else if (value.is_number() || value.is_boolean()) {
      out << "  " << prefix << key << " = " << value.dump() << '\n';
    }
  }
}

}  // namespace

RunSummary run_transmission(const ExperimentConfig& cfg, const fs::path& out_dir) {
  auto s = start(Command::transmission, cfg);
  const auto p = make_profile(cfg);
  const auto rows = sweep(p, *cfg.e_min, *cfg.e_max, cfg.sweep_n);

  std::vector<std::vector<std::string>> table;
  std::size_t failed = 0;
  double max_residual = 0.0;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++failed;
      s.warnings.push_back("E = " + format_number(r.energy) + " eV failed: " + r.error);
      const std::string nan = format_number(std::nan(""));
      table.push_back({format_number(r.energy), nan, nan, nan, nan, nan, nan, "failed", nan});
      continue;
    }
    const auto& t = *r.result;
    max_residual = std::max(max_residual, r.residual);
    table.push_back({format_number(r.energy), format_number(t.t_prob), format_number(t.r_prob),
                     format_number(t.t_amp.real()), format_number(t.t_amp.imag()), format_number(t.r_amp.real()),
                     format_number(t.r_amp.imag()), std::string(regime_name(t.regime)), format_number(r.residual)});
  }
  if (failed == rows.size()) throw NumericalError("every energy in the sweep failed");

  const std::string csv = stem(cfg, Command::transmission) + ".csv";
  write_csv(out_dir / csv,
            {"energy_ev", "t_prob", "r_prob", "t_re", "t_im", "r_re", "r_im", "regime", "residual"}, table);
  s.files.push_back(csv);

  Json resonances = Json::array();
  std::string source;
  if (p.segments.size() == 1 && p.lead_height == 0.0) {
    source = "analytic";
    const RectangularBarrier b{p.segments[0].height, p.segments[0].width, p.mass};
    int n = 1;
    for (double e : resonance_energies(b, static_cast<int>(cfg.resonances))) {
      resonances.push_back({{"n", n++}, {"energy_ev", e}, {"t_prob", solve(p, e).transmission.t_prob}});
    }
  } else if (!p.segments.empty()) {
    source = "sweep_peaks";
    for (const auto& [e, t] : sweep_peaks(p, rows, cfg.resonances)) {
      resonances.push_back({{"energy_ev", e}, {"t_prob", t}});
    }
  } else {
    source = "none";
  }

  double t_lo = 1.0, t_hi = 0.0;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    t_lo = std::min(t_lo, r.result->t_prob);
    t_hi = std::max(t_hi, r.result->t_prob);
  }
  s.results = {{"profile", profile_json(p)},
               {"n_rows", rows.size()},
               {"n_failed", failed},
               {"max_residual", max_residual},
               {"t_prob_min", t_lo},
               {"t_prob_max", t_hi},
               {"resonance_source", source},
               {"resonances", resonances}};
  return s;
}

RunSummary run_packet(const ExperimentConfig& cfg, const fs::path& out_dir) {
  auto s = start(Command::packet, cfg);
  const auto p = make_profile(cfg);
  const auto [spec, settings] = packet_settings(cfg, p);
  const auto run = compare_models(spec, p, settings);
  append(s.warnings, run.warnings);

  const std::string name = stem(cfg, Command::packet);
  std::vector<std::vector<std::string>> table;
  double max_norm_dev = 0.0;
  for (const auto& t : run.series) {
    max_norm_dev = std::max(max_norm_dev, std::abs(t.norm - 1.0));
    table.push_back({format_number(t.t), format_number(t.norm), format_number(t.prob_left),
                     format_number(t.prob_barrier), format_number(t.prob_right), format_number(t.x_mean)});
  }
  const std::string series = name + "_series.csv";
  write_csv(out_dir / series, {"t_fs", "norm", "prob_left", "prob_barrier", "prob_right", "x_mean"}, table);
  s.files.push_back(series);

  Json snaps = Json::array();
  for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
    const auto& snap = run.snapshots[i];
    std::ostringstream fname;
    fname << name << "_snapshot_" << i << ".dat";
    write_columns(out_dir / fname.str(), {"t_fs " + format_number(snap.t), "x_nm density_per_nm"}, snap.x,
                  snap.density);
    s.files.push_back(fname.str());
    snaps.push_back({{"t_fs", snap.t}, {"file", fname.str()}});
  }

  const auto transit = packet_transit(run);
  const double ballistic = p.total_width() / run.group_velocity;
  s.results = {{"profile", profile_json(p)},
               {"settings", settings_json(settings)},
               {"exact", run.exact},
               {"t_spec", run.t_spec},
               {"classical_filter", run.classical},
               {"discrepancies",
                {{"exact_minus_spec", run.exact_minus_spec},
                 {"exact_minus_classical", run.exact_minus_classical},
                 {"spec_minus_classical", run.spec_minus_classical}}},
               {"settled", run.settled},
               {"settle_time_fs", run.settle_time},
               {"end_time_fs", run.end_time},
               {"max_norm_drift", run.max_norm_drift},
               {"max_norm_deviation", max_norm_dev},
               {"group_velocity_nm_per_fs", run.group_velocity},
               {"packet_transit", transit_json(transit)},
               {"ballistic_time_fs", ballistic},
               {"snapshots", snaps}};
  return s;
}

RunSummary run_estimate(const ExperimentConfig& cfg, const fs::path&) {
  auto s = start(Command::estimate, cfg);
  const auto u = paper_estimate(*cfg.delta_x, EffectiveMass(cfg.mass_ratio));
  const double dp_err = std::abs(u.delta_p_si - 1.054e-25) / 1.054e-25;
  const double de_err = std::abs(u.delta_e - 1.1) / 1.1;
  const bool dt_ok = u.delta_t_si >= 1e-16 && u.delta_t_si <= 1e-14;
  s.results = {
      {"delta_x_nm", u.delta_x},
      {"delta_p_ev_fs_per_nm", u.delta_p},
      {"delta_p_si", u.delta_p_si},
      {"p_assumed_ev_fs_per_nm", u.p_assumed},
      {"delta_e_ev", u.delta_e},
      {"delta_t_fs", u.delta_t},
      {"delta_t_si", u.delta_t_si},
      {"mass_ratio", u.mass.ratio},
      {"convention", u.convention},
      {"paper_reproduction",
       {{"delta_p_si", {{"reference", 1.054e-25}, {"relative_error", dp_err}, {"tolerance", 0.005}, {"pass", dp_err <= 0.005}}},
        {"delta_e", {{"reference", 1.1}, {"relative_error", de_err}, {"tolerance", 0.05}, {"pass", de_err <= 0.05}}},
        {"delta_t_si", {{"reference", 1e-15}, {"range", {1e-16, 1e-14}}, {"pass", dt_ok}}},
        {"all_pass", dp_err <= 0.005 && de_err <= 0.05 && dt_ok}}},
  };
  return s;
}

RunSummary run_times(const ExperimentConfig& cfg, const fs::path&) {
  auto s = start(Command::times, cfg);
  const auto p = make_profile(cfg);
  const auto u = paper_estimate(*cfg.delta_x, p.mass);
  std::optional<ModelComparison> run;
  if (cfg.times_packet) {
    const auto [spec, settings] = packet_settings(cfg, p);
    run = compare_models(spec, p, settings);
    append(s.warnings, run->warnings, "packet run: ");
  }
  // phase_time with the configured step; time_report uses the default.
  auto report = time_report(p, *cfg.energy, u, run ? &*run : nullptr);
  if (cfg.de > 0.0) report.phase = phase_time(p, *cfg.energy, cfg.de);
  const auto ratios = compare_with_uncertainty(report, u);
  append(s.warnings, report.warnings);
  append(s.warnings, ratios.warnings);

  const auto& ph = report.phase;
  s.results = {
      {"profile", profile_json(p)},
      {"energy_ev", report.energy},
      {"phase_time",
       {{"tau_fs", ph.tau},
        {"de_ev", ph.de},
        {"relative_change", ph.relative_change},
        {"converged", ph.converged},
        {"ill_conditioned", ph.ill_conditioned},
        {"halvings", ph.halvings}}},
      {"dwell_time_fs", report.dwell_time},
      {"packet_transit", report.packet_transit ? transit_json(*report.packet_transit) : Json(nullptr)},
      {"uncertainty_time_fs", report.uncertainty_time},
      {"ratios",
       {{"applicable", ratios.applicable},
        {"phase_over_dt", optional_json(ratios.phase_over_dt)},
        {"dwell_over_dt", optional_json(ratios.dwell_over_dt)},
        {"transit_over_dt", optional_json(ratios.transit_over_dt)},
        {"phase_over_dwell", optional_json(ratios.phase_over_dwell)},
        {"within_order", ratios.within_order},
        {"transit_within_order",
         ratios.transit_within_order ? Json(*ratios.transit_within_order) : Json(nullptr)}}},
  };
  return s;
}

RunSummary run_check_uncertainty(const ExperimentConfig& cfg, const fs::path&) {
  auto s = start(Command::check_uncertainty, cfg);
  const auto grid = make_grid(cfg.u_x_min, cfg.u_x_max, cfg.u_n_points);
  const auto x = position_observable(grid);
  const auto p = momentum_observable(grid);
  const EffectiveMass mass(cfg.mass_ratio);
  std::mt19937_64 rng(cfg.seed);

  Json states = Json::array();
  bool all_hold = true;
  std::optional<WaveFunction> first;
  std::map<std::string, std::size_t> random_warnings;  // message -> count
  auto check = [&](const WaveFunction& psi, const std::string& label) {
    const auto r = robertson_check(psi, x, p);
    all_hold = all_hold && r.holds;
    if (label.starts_with("random_")) {
      for (const auto& w : r.warnings) ++random_warnings[w];
    } else {
      append(s.warnings, r.warnings, label + ": ");
    }
    states.push_back({{"state", label},
                      {"delta_x", r.delta_a},
                      {"delta_p", r.delta_b},
                      {"lhs", r.lhs},
                      {"rhs", r.rhs},
                      {"holds", r.holds}});
    if (!first) first = psi;
  };
  std::size_t n_random = 0;
  for (const auto& kind : cfg.states) {
    if (kind == "gaussian") {
      check(init_gaussian({cfg.u_x0, cfg.u_sigma_x, cfg.u_e0, mass}, grid), "gaussian");
    } else {
      for (std::size_t i = 0; i < cfg.n_random; ++i) check(random_state(grid, rng), "random_" + std::to_string(n_random++));
    }
  }
  for (const auto& [w, count] : random_warnings) {
    s.warnings.push_back(std::to_string(count) + " of " + std::to_string(n_random) + " random states: " + w);
  }
  if (!all_hold) s.warnings.push_back("Robertson inequality violated for at least one state");

  Json ensemble = nullptr;
  if (cfg.ensemble_samples > 0) {
    const auto exact = robertson_check(*first, x, p);
    const auto e = ensemble_demo(*first, x, p, cfg.ensemble_samples, cfg.seed);
    ensemble = {{"state", states.front()["state"]},
                {"seed", e.seed},
                {"n_samples", e.n_samples},
                {"delta_x", e.delta_a},
                {"delta_p", e.delta_b},
                {"product", e.product},
                {"exact_product", exact.lhs},
                {"relative_difference", std::abs(e.product - exact.lhs) / exact.lhs}};
  }
  s.results = {{"seed", cfg.seed},
               {"hbar_over_2", 0.5 * codata::hbar},
               {"n_states", states.size()},
               {"all_hold", all_hold},
               {"states", states},
               {"ensemble", ensemble}};
  return s;
}

RunSummary run(Command command, const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  validate_for(cfg, command);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + out_dir.string() + ": " + ec.message());
  RunSummary s;
  switch (command) {
    case Command::transmission: s = run_transmission(cfg, out_dir); break;
    case Command::packet: s = run_packet(cfg, out_dir); break;
    case Command::estimate: s = run_estimate(cfg, out_dir); break;
    case Command::times: s = run_times(cfg, out_dir); break;
    case Command::check_uncertainty: s = run_check_uncertainty(cfg, out_dir); break;
  }
  const std::string json = stem(cfg, command) + ".json";
  s.files.push_back(json);
  s.started_utc = started;
  s.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out_dir / json, summary_to_json(s));
  return s;
}

fs::path resolve_out_dir(const CommandOptions& opts) {
  if (opts.out_dir) return *opts.out_dir;
  if (const char* env = std::getenv("TUNNEL_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

int execute(Command command, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(opts.config_path, std::ios::binary);
    if (!in) throw ValidationError("cannot read config " + opts.config_path.string());
    std::ostringstream text;
    text << in.rdbuf();
    auto cfg = parse_config(text.str());
    if (opts.seed) cfg.seed = *opts.seed;
    const auto dir = resolve_out_dir(opts);
    const auto s = run(command, cfg, dir);
    for (const auto& w : s.warnings) err << "warning: " << w << '\n';
    if (!opts.quiet) {
      out << command_name(command) << ": wrote";
      for (const auto& f : s.files) out << ' ' << f;
      out << " to " << dir.string() << '\n';
      print_scalars(out, s.results, "");
    }
    return s.warnings.empty() ? exit_ok : exit_warnings;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace tunnel::cli
