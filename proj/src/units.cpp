#include "tunnel/units.hpp"

#include <cmath>
#include <string>

#include "tunnel/errors.hpp"

namespace tunnel {

PhysicalConstants constants() noexcept {
  return PhysicalConstants{
      .hbar = codata::hbar,
      .hbar2_over_2me = codata::hbar2_over_2me,
      .electron_mass_si = codata::electron_mass_si,
      .ev_fs_per_nm_to_si_momentum = codata::ev_fs_per_nm_to_si_momentum,
  };
}

EffectiveMass::EffectiveMass(double r) : ratio(r) {
  if (!std::isfinite(r) || r <= 0.0) {
    throw ValidationError("effective mass ratio must be finite and > 0, got " + std::to_string(r));
  }
}

SpatialGrid::SpatialGrid(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points), dx_(0.0) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw ValidationError("grid bounds must be finite");
  }
  if (!(x_max > x_min)) {
    throw ValidationError("grid requires x_max > x_min");
  }
  if (n_points < min_points) {
    throw ValidationError("grid requires at least 8 points, got " + std::to_string(n_points));
  }
  dx_ = (x_max - x_min) / static_cast<double>(n_points - 1);
}

SpatialGrid make_grid(double x_min, double x_max, std::size_t n_points) {
  return SpatialGrid(x_min, x_max, n_points);
}

double momentum_to_si(double p) { return p * codata::ev_fs_per_nm_to_si_momentum; }

double momentum_from_si(double p_si) { return p_si / codata::ev_fs_per_nm_to_si_momentum; }

}  // namespace tunnel
