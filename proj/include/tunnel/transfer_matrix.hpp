#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tunnel/analytic_barrier.hpp"
#include "tunnel/units.hpp"

namespace tunnel {

struct Segment {
  double width = 0.0;   // nm, > 0
  double height = 0.0;  // eV
};

/// Piecewise-constant potential between two semi-infinite leads at
/// lead_height. The first segment starts at x = 0.
struct PotentialProfile {
  std::vector<Segment> segments;
  double lead_height = 0.0;
  EffectiveMass mass{};

  static PotentialProfile free(EffectiveMass mass = {}) { return {{}, 0.0, mass}; }
  static PotentialProfile barrier(double v0, double d, EffectiveMass mass = {});

  double total_width() const noexcept;
  /// Highest segment height, or lead_height for an empty profile.
  double max_height() const noexcept;
  /// V(x) including the leads.
  double potential_at(double x) const noexcept;
  /// Mean of V over [a, b].
  double cell_average(double a, double b) const noexcept;
};

void validate_profile(const PotentialProfile& profile);

/// How a region's coefficient pair is to be read.
///   propagating: psi = first*exp(+iq xi) + second*exp(-iq xi)
///   evanescent:  psi = first*exp(+alpha xi) + second*exp(-alpha xi)
///   linear:      psi = first + second*xi   (E equal to the region height)
/// xi = x - x_ref. For segments x_ref is the segment's left edge; both leads
/// use x_ref = 0, so the left lead pair is (1, r_amp) and the right lead
/// pair is (t_amp, 0).
enum class RegionBasis { propagating, evanescent, linear };

struct RegionCoefficients {
  double x_start = 0.0;
  double x_end = 0.0;  // +/- infinity for the leads
  double x_ref = 0.0;
  double height = 0.0;
  RegionBasis basis = RegionBasis::propagating;
  double wavenumber = 0.0;  // q or alpha; 0 for linear
  cplx first{};
  cplx second{};
  /// Evanescent only: first * exp(alpha * width), i.e. the growing term at the
  /// right face. Evaluation uses this so it never overflows.
  cplx growing_at_end{};

  cplx psi(double x) const;
  cplx dpsi(double x) const;
};

struct ScatteringCoefficients {
  std::vector<RegionCoefficients> regions;  // left lead, segments..., right lead

  /// Stationary wavefunction for unit incident amplitude.
  cplx psi(double x) const;
};

struct SolveResult {
  TransmissionResult transmission;
  ScatteringCoefficients coefficients;
  /// Max relative mismatch of psi and psi' across interfaces after
  /// substituting the coefficients back.
  double residual = 0.0;
};

SolveResult solve(const PotentialProfile& profile, double energy);

struct SweepRow {
  double energy = 0.0;
  std::optional<TransmissionResult> result;
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // empty when the row succeeded

  bool ok() const noexcept { return result.has_value(); }
};

/// n uniformly spaced energies in [e_min, e_max], ordered by energy. Rows
/// that fail are flagged rather than aborting the sweep.
std::vector<SweepRow> sweep(const PotentialProfile& profile, double e_min, double e_max,
                            std::size_t n);

}  // namespace tunnel
