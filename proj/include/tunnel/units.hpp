#pragma once

// Unit system used throughout the library:
//   energy  eV
//   length  nm
//   time    fs
//   mass    free-electron masses (EffectiveMass::ratio), or eV*fs^2/nm^2
//           where an absolute mass is needed.
// Momenta are carried as eV*fs/nm (hbar * nm^-1).

#include <cstddef>

namespace tunnel {

struct PhysicalConstants {
  double hbar;                         // eV*fs
  double hbar2_over_2me;               // eV*nm^2, free electron
  double electron_mass_si;             // kg
  double ev_fs_per_nm_to_si_momentum;  // kg*m/s per eV*fs/nm
};

namespace codata {
// CODATA-2018. h and e are exact by definition of the SI.
inline constexpr double planck_si = 6.62607015e-34;            // J*s
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double electron_mass_si = 9.1093837015e-31;   // kg
inline constexpr double hbar_si = 1.054571817646156e-34;        // J*s

inline constexpr double hbar = 0.6582119569509066;              // eV*fs
inline constexpr double hbar2_over_2me = 0.03809982116154860;   // eV*nm^2
inline constexpr double electron_mass = 5.685630103565722;      // eV*fs^2/nm^2
inline constexpr double ev_fs_per_nm_to_si_momentum = 1.602176634e-25;
inline constexpr double fs_to_s = 1e-15;
}  // namespace codata

/// The fixed constant set. Deterministic, no lookups.
PhysicalConstants constants() noexcept;

/// Carrier mass in units of the free-electron mass.
struct EffectiveMass {
  double ratio = 1.0;

  EffectiveMass() = default;
  explicit EffectiveMass(double r);

  /// Absolute mass in eV*fs^2/nm^2.
  double absolute() const noexcept { return ratio * codata::electron_mass; }

  friend bool operator==(const EffectiveMass&, const EffectiveMass&) = default;
};

/// Uniform grid with both endpoints included.
class SpatialGrid {
 public:
  static constexpr std::size_t min_points = 8;

  SpatialGrid(double x_min, double x_max, std::size_t n_points);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
  double length() const noexcept { return x_max_ - x_min_; }

  friend bool operator==(const SpatialGrid&, const SpatialGrid&) = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

SpatialGrid make_grid(double x_min, double x_max, std::size_t n_points);

/// eV*fs/nm -> kg*m/s.
double momentum_to_si(double p);
/// kg*m/s -> eV*fs/nm.
double momentum_from_si(double p_si);

}  // namespace tunnel
