#pragma once

#include <complex>
#include <string_view>
#include <vector>

#include "tunnel/units.hpp"

namespace tunnel {

using cplx = std::complex<double>;

/// Rectangular barrier of height v0 occupying [0, d], zero potential outside.
struct RectangularBarrier {
  double v0 = 0.0;  // eV
  double d = 0.0;   // nm
  EffectiveMass mass{};
};

enum class Regime { below, at, above };

std::string_view regime_name(Regime r) noexcept;

/// Transmission/reflection for unit incident amplitude from the left.
///
/// t_amp multiplies exp(ikx) for x beyond the scatterer (global x, origin at
/// the left edge of the scatterer); r_amp multiplies exp(-ikx) for x < 0.
struct TransmissionResult {
  double energy = 0.0;
  double t_prob = 0.0;
  double r_prob = 0.0;
  cplx t_amp{};
  cplx r_amp{};
  Regime regime = Regime::above;
};

/// Relative window around E = V within which the degenerate limit is used.
inline constexpr double seam_tolerance = 1e-12;

/// Above this alpha*d the deep-tunneling asymptotic form is used.
inline constexpr double opaque_threshold = 200.0;

/// Lead wavenumber sqrt(2 m* E)/hbar in nm^-1.
double wavevector(double energy, EffectiveMass mass);

/// Evanescent decay constant inside the barrier, nm^-1. Requires 0 < E < v0.
double decay_constant(double energy, const RectangularBarrier& barrier);

TransmissionResult transmission(double energy, const RectangularBarrier& barrier);

/// Energies where sin(k1 d) = 0 above the barrier, n = 1..n_max, ascending.
std::vector<double> resonance_energies(const RectangularBarrier& barrier, int n_max);

}  // namespace tunnel
