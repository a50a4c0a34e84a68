#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tunnel/transfer_matrix.hpp"
#include "tunnel/uncertainty.hpp"
#include "tunnel/wavepacket.hpp"

namespace tunnel {

struct PhaseTimeResult {
  double tau = 0.0;              // fs, value at the finer step
  double de = 0.0;               // eV, finer step actually used
  double relative_change = 0.0;  // |tau(2 de) - tau(de)| / |tau(de)|
  bool converged = false;        // relative_change < 1e-3
  bool ill_conditioned = false;  // |t_amp| below 1e-100 somewhere on the stencil
  int halvings = 0;
};

/// Wigner delay hbar * d arg(t_edge) / dE, t_edge = t_amp * exp(i k L) being
/// the amplitude referred to the barrier exit. Five-point stencil, phases
/// unwrapped along the stencil; de is halved until successive estimates
/// agree to 1e-3. de <= 0 selects the default 1e-4 * energy.
PhaseTimeResult phase_time(const PotentialProfile& profile, double energy, double de = 0.0);

/// Integral of |psi|^2 over the profile divided by the incident flux
/// hbar k / m*, from the stationary coefficients in closed form per segment.
double dwell_time(const PotentialProfile& profile, double energy);

struct TransitResult {
  double value = 0.0;  // fs
  double t_in = 0.0;   // incident centroid reaches x = 0
  double t_out = 0.0;  // transmitted centroid leaves x = L
  bool reliable = false;
  std::string reason;  // why it is not reliable
};

/// Exit time of the transmitted centroid minus arrival time of the incident
/// centroid, both from straight-line fits to the recorded series.
TransitResult packet_transit(const ModelComparison& run);

struct TimeReport {
  double energy = 0.0;
  PhaseTimeResult phase;
  double dwell_time = 0.0;
  std::optional<TransitResult> packet_transit;
  double uncertainty_time = 0.0;  // hbar / dE
  EffectiveMass mass{};
  double total_width = 0.0;
  double max_height = 0.0;
  std::size_t n_segments = 0;
  std::vector<std::string> warnings;
};

TimeReport time_report(const PotentialProfile& profile, double energy,
                       const UncertaintyReport& uncertainty, const ModelComparison* run = nullptr);

struct TimeRatios {
  bool applicable = false;  // false for an empty profile
  std::optional<double> phase_over_dt;
  std::optional<double> dwell_over_dt;
  std::optional<double> transit_over_dt;
  std::optional<double> phase_over_dwell;
  /// phase/dt, dwell/dt and phase/dwell all in [0.1, 10].
  bool within_order = false;
  /// transit/dt in [0.1, 10]; reported separately because the transmitted
  /// centroid of a broad packet is advanced by momentum filtering.
  std::optional<bool> transit_within_order;
  std::vector<std::string> warnings;
};

TimeRatios compare_with_uncertainty(const TimeReport& report, const UncertaintyReport& uncertainty);

}  // namespace tunnel
