#include "tunnel/cli/output.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "tunnel/errors.hpp"

namespace tunnel::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ValidationError("cannot write " + path.string());
  return os;
}

template <class T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto os = open_out(path);
  auto line = [&os](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << fields[i];
    os << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  if (!os) throw NumericalError("write failed: " + path.string());
}

void write_columns(const std::filesystem::path& path, const std::vector<std::string>& comments,
                   const std::vector<double>& a, const std::vector<double>& b) {
  auto os = open_out(path);
  for (const auto& c : comments) os << "# " << c << '\n';
  for (std::size_t i = 0; i < a.size(); ++i) os << format_number(a[i]) << ' ' << format_number(b[i]) << '\n';
  if (!os) throw NumericalError("write failed: " + path.string());
}

Json config_to_json(const ExperimentConfig& c) {
  Json segments = nullptr;
  if (c.segments) {
    segments = Json::array();
    for (const auto& s : *c.segments) segments.push_back({{"width", s.width}, {"height", s.height}});
  }
  return {
      {"run", {{"experiment", c.experiment ? Json(std::string(command_name(*c.experiment))) : Json(nullptr)},
               {"seed", c.seed}}},
      {"material", {{"mass_ratio", c.mass_ratio}}},
      {"barrier", {{"v0", opt(c.v0)}, {"d", opt(c.d)}, {"lead", c.lead}, {"segments", segments}}},
      {"sweep", {{"e_min", opt(c.e_min)}, {"e_max", opt(c.e_max)}, {"n", c.sweep_n}, {"resonances", c.resonances}}},
      {"packet", {{"x0", opt(c.x0)}, {"sigma_x", opt(c.sigma_x)}, {"e0", opt(c.e0)}}},
      {"grid", {{"x_min", opt(c.grid_x_min)}, {"x_max", opt(c.grid_x_max)}, {"n_points", opt(c.grid_n_points)}}},
      {"time", {{"dt", opt(c.dt)},
                {"t_max", opt(c.t_max)},
                {"record_interval", c.record_interval},
                {"settle_rate", c.settle_rate},
                {"post_settle", c.post_settle},
                {"snapshots", c.snapshots}}},
      {"estimate", {{"delta_x", opt(c.delta_x)}}},
      {"times", {{"energy", opt(c.energy)}, {"de", c.de}, {"packet", c.times_packet}}},
      {"uncertainty", {{"states", c.states},
                       {"n_random", c.n_random},
                       {"x_min", c.u_x_min},
                       {"x_max", c.u_x_max},
                       {"n_points", c.u_n_points},
                       {"sigma_x", c.u_sigma_x},
                       {"x0", c.u_x0},
                       {"e0", c.u_e0},
                       {"ensemble_samples", c.ensemble_samples}}},
      {"output", {{"name", opt(c.name)}}},
  };
}

Json summary_to_json(const RunSummary& s) {
  return {
      {"command", std::string(command_name(s.command))},
      {"config", s.config},
      {"results", s.results},
      {"files", s.files},
      {"warnings", s.warnings},
      {"timestamp", {{"started_utc", s.started_utc}, {"wall_clock_s", s.wall_clock_s}}},
  };
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw NumericalError("write failed: " + path.string());
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

}  // namespace tunnel::cli
