#include "tunnel/timing.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

constexpr double pi = std::numbers::pi;

struct StencilEstimate {
  double tau = 0.0;
  bool unwrapped = false;
  bool tiny = false;
};

StencilEstimate stencil(const PotentialProfile& p, double energy, double de) {
  const double length = p.total_width();
  std::array<double, 5> phi{};
  StencilEstimate out;
  for (int j = 0; j < 5; ++j) {
    const double e = energy + (j - 2) * de;
    const auto s = solve(p, e);
    const double k = wavevector(e - p.lead_height, p.mass);
    const cplx t_edge = s.transmission.t_amp * std::polar(1.0, k * length);
    if (std::abs(s.transmission.t_amp) < 1e-100) out.tiny = true;
    phi[static_cast<std::size_t>(j)] = std::arg(t_edge);
  }
  for (std::size_t j = 1; j < 5; ++j) {
    double jump = phi[j] - phi[j - 1];
    jump -= 2.0 * pi * std::round(jump / (2.0 * pi));
    if (std::abs(jump) >= 0.5 * pi) return out;
    phi[j] = phi[j - 1] + jump;
  }
  out.unwrapped = true;
  out.tau = codata::hbar * (phi[0] - 8.0 * phi[1] + 8.0 * phi[3] - phi[4]) / (12.0 * de);
  return out;
}

// Linear least squares y = a + b t; returns (a, b).
std::pair<double, double> line_fit(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  const double b = sty / stt;
  return {my - b * mt, b};
}

}  // namespace

PhaseTimeResult phase_time(const PotentialProfile& profile, double energy, double de) {
  validate_profile(profile);
  if (!std::isfinite(energy) || !(energy > profile.lead_height)) {
    throw ValidationError("energy must lie above the lead height");
  }
  if (std::isnan(de)) throw ValidationError("de must not be NaN");
  PhaseTimeResult r;
  if (profile.segments.empty()) {
    r.converged = true;
    return r;
  }
  double step = de > 0.0 ? de : 1e-4 * energy;
  // Keep the whole stencil above the lead floor.
  while (energy - 2.0 * step <= profile.lead_height) step *= 0.5;

  constexpr int max_halvings = 40;
  StencilEstimate coarse = stencil(profile, energy, step);
  for (; r.halvings < max_halvings; ++r.halvings) {
    if (coarse.unwrapped) break;
    step *= 0.5;
    coarse = stencil(profile, energy, step);
  }
  for (; r.halvings < max_halvings; ++r.halvings) {
    const StencilEstimate fine = stencil(profile, energy, 0.5 * step);
    r.ill_conditioned = r.ill_conditioned || coarse.tiny || fine.tiny;
    if (fine.unwrapped) {
      r.tau = fine.tau;
      r.de = 0.5 * step;
      r.relative_change = std::abs(coarse.tau - fine.tau) / std::abs(fine.tau);
      if (r.relative_change < 1e-3 || std::abs(coarse.tau - fine.tau) < 1e-12) {
        r.converged = true;
        break;
      }
      coarse = fine;
    }
    step *= 0.5;
  }
  if (!r.converged && r.de == 0.0) throw NumericalError("phase could not be unwrapped along the stencil");
  return r;
}

double dwell_time(const PotentialProfile& profile, double energy) {
  validate_profile(profile);
  if (profile.segments.empty()) return 0.0;
  const auto s = solve(profile, energy);
  const auto& regs = s.coefficients.regions;
  double integral = 0.0;
  for (std::size_t i = 1; i + 1 < regs.size(); ++i) {
    const auto& r = regs[i];
    const double w = r.x_end - r.x_start;
    const double q = r.wavenumber;
    switch (r.basis) {
      case RegionBasis::propagating: {
        const cplx cross = r.first * std::conj(r.second);
        const cplx osc = (std::exp(cplx{0.0, 2.0 * q * w}) - 1.0) / cplx{0.0, 2.0 * q};
        integral += (std::norm(r.first) + std::norm(r.second)) * w + 2.0 * (cross * osc).real();
        break;
      }
      case RegionBasis::evanescent: {
        // |G|^2 and |D|^2 terms in overflow-free form, G the growing
        // amplitude at the right face.
        const double decay = -std::expm1(-2.0 * q * w) / (2.0 * q);
        integral += (std::norm(r.growing_at_end) + std::norm(r.second)) * decay +
                    2.0 * (r.first * std::conj(r.second)).real() * w;
        break;
      }
      case RegionBasis::linear:
        integral += std::norm(r.first) * w + (r.first * std::conj(r.second)).real() * w * w +
                    std::norm(r.second) * w * w * w / 3.0;
        break;
    }
  }
  const double k = wavevector(energy - profile.lead_height, profile.mass);
  const double velocity = codata::hbar * k / profile.mass.absolute();
  return integral / velocity;
}

TransitResult packet_transit(const ModelComparison& run) {
  TransitResult out;
  if (!run.settled) {
    out.reason = "run did not settle";
    return out;
  }
  if (!(run.exact > 1e-6)) {
    out.reason = "transmitted probability below 1e-6; no centroid to track";
    return out;
  }
  std::vector<double> t_in, x_in, t_out, x_out;
  for (const auto& s : run.series) {
    if (s.prob_barrier + s.prob_right < 1e-4) {
      t_in.push_back(s.t);
      x_in.push_back(s.x_mean);
    }
    if (s.t >= run.settle_time) {
      t_out.push_back(s.t);
      x_out.push_back(s.x_right_mean);
    }
  }
  if (t_in.size() >= 2) {
    const auto [a, b] = line_fit(t_in, x_in);
    out.t_in = (run.barrier_left - a) / b;
  } else {
    out.t_in = (run.barrier_left - run.x0) / run.group_velocity;
  }
  if (t_out.size() < 2) {
    out.reason = "too few samples after settling";
    return out;
  }
  const auto [a, b] = line_fit(t_out, x_out);
  if (!(b > 0.0)) {
    out.reason = "transmitted centroid is not moving away from the barrier";
    return out;
  }
  out.t_out = (run.barrier_right - a) / b;
  out.value = out.t_out - out.t_in;
  out.reliable = true;
  return out;
}

TimeReport time_report(const PotentialProfile& profile, double energy,
                       const UncertaintyReport& uncertainty, const ModelComparison* run) {
  TimeReport r;
  r.energy = energy;
  r.mass = profile.mass;
  r.total_width = profile.total_width();
  r.max_height = profile.max_height();
  r.n_segments = profile.segments.size();
  r.phase = phase_time(profile, energy);
  r.dwell_time = dwell_time(profile, energy);
  r.uncertainty_time = uncertainty.delta_t;
  if (!r.phase.converged) r.warnings.push_back("phase time did not converge to 1e-3");
  if (r.phase.ill_conditioned) r.warnings.push_back("transmission amplitude near zero; phase is ill-conditioned");
  if (run != nullptr) {
    r.packet_transit = packet_transit(*run);
    if (!r.packet_transit->reliable) {
      r.warnings.push_back("packet transit unreliable: " + r.packet_transit->reason);
    } else if (r.packet_transit->value <= 0.0) {
      r.warnings.push_back("packet transit is not positive: the transmitted part is the fast end of "
                           "the spectrum and its centroid runs ahead of the incident one");
    }
  }
  return r;
}

TimeRatios compare_with_uncertainty(const TimeReport& report, const UncertaintyReport& uncertainty) {
  TimeRatios out;
  if (!(report.mass == uncertainty.mass)) {
    out.warnings.push_back("time report and uncertainty estimate use different effective masses");
  }
  if (report.n_segments == 0) return out;
  out.applicable = true;
  const double dt = uncertainty.delta_t;
  out.phase_over_dt = report.phase.tau / dt;
  out.dwell_over_dt = report.dwell_time / dt;
  if (report.dwell_time > 0.0) out.phase_over_dwell = report.phase.tau / report.dwell_time;
  if (report.packet_transit && report.packet_transit->reliable) {
    out.transit_over_dt = report.packet_transit->value / dt;
  }
  auto in_band = [](const std::optional<double>& v) { return !v || (*v >= 0.1 && *v <= 10.0); };
  out.within_order =
      in_band(out.phase_over_dt) && in_band(out.dwell_over_dt) && in_band(out.phase_over_dwell);
  if (out.transit_over_dt) out.transit_within_order = in_band(out.transit_over_dt);
  return out;
}

}  // namespace tunnel
