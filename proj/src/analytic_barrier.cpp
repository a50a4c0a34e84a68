#include "tunnel/analytic_barrier.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tunnel/errors.hpp"

namespace tunnel {
namespace {

void validate_barrier(const RectangularBarrier& b) {
  if (!std::isfinite(b.v0) || !std::isfinite(b.d)) {
    throw ValidationError("barrier parameters must be finite");
  }
  if (b.v0 <= 0.0) throw ValidationError("barrier height v0 must be > 0");
  if (b.d < 0.0) throw ValidationError("barrier width d must be >= 0");
  if (!(b.mass.ratio > 0.0)) throw ValidationError("effective mass ratio must be > 0");
}

// sinh(x)/x and sin(x)/x without the 0/0 at the origin.
double shc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

double snc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

std::string_view regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::below: return "below";
    case Regime::at: return "at";
    case Regime::above: return "above";
  }
  return "unknown";
}

double wavevector(double energy, EffectiveMass mass) {
  if (!std::isfinite(energy) || energy <= 0.0) {
    throw ValidationError("wavevector requires energy > 0, got " + std::to_string(energy));
  }
  return std::sqrt(mass.ratio * energy / codata::hbar2_over_2me);
}

double decay_constant(double energy, const RectangularBarrier& barrier) {
  validate_barrier(barrier);
  if (!std::isfinite(energy) || energy <= 0.0 || energy >= barrier.v0) {
    throw ValidationError("decay_constant requires 0 < E < v0");
  }
  return std::sqrt(barrier.mass.ratio * (barrier.v0 - energy) / codata::hbar2_over_2me);
}

TransmissionResult transmission(double energy, const RectangularBarrier& barrier) {
  validate_barrier(barrier);
  if (!std::isfinite(energy) || energy <= 0.0) {
    throw ValidationError("transmission requires energy > 0, got " + std::to_string(energy));
  }
  const double v0 = barrier.v0;
  const double d = barrier.d;
  const double k = wavevector(energy, barrier.mass);
  const double c = barrier.mass.ratio / codata::hbar2_over_2me;  // 2m*/hbar^2

  TransmissionResult out;
  out.energy = energy;
  if (std::abs(energy - v0) <= seam_tolerance * v0) {
    out.regime = Regime::at;
  } else {
    out.regime = energy < v0 ? Regime::below : Regime::above;
  }

  if (d == 0.0) {
    out.t_prob = 1.0;
    out.r_prob = 0.0;
    out.t_amp = 1.0;
    out.r_amp = 0.0;
    return out;
  }

  constexpr cplx i{0.0, 1.0};
  const cplx back_phase = std::exp(-i * (k * d));

  // Amplitudes follow from matching psi and psi' at x = 0 and x = d:
  //   t = exp(-ikd) / den,  r = -i (k^2 - kappa)/(2k) * S / den,
  //   den = C - i (k^2 + kappa)/(2k) * S,
  // with kappa = 2m*(E - v0)/hbar^2, C = cos(qd), S = sin(qd)/q.
  switch (out.regime) {
    case Regime::at: {
      const double half = 0.5 * k * d;
      const cplx den{1.0, -half};
      out.t_prob = 1.0 / (1.0 + c * v0 * d * d / 4.0);
      out.t_amp = back_phase / den;
      out.r_amp = -i * half / den;
      break;
    }
    case Regime::below: {
      const double alpha = std::sqrt(c * (v0 - energy));
      const double x = alpha * d;
      const double k2 = k * k;
      const double a2 = alpha * alpha;
      if (x > opaque_threshold) {
        const double eta = (a2 - k2) / (2.0 * k * alpha);
        const double xi = (a2 + k2) / (2.0 * k * alpha);
        const cplx den{1.0, eta};
        out.t_prob = 16.0 * energy * (v0 - energy) / (v0 * v0) * std::exp(-2.0 * x);
        out.t_amp = back_phase * (2.0 * std::exp(-x)) / den;
        out.r_amp = -i * xi / den;
      } else {
        const double s = d * shc(x);  // sinh(alpha d)/alpha
        const cplx den{std::cosh(x), (a2 - k2) / (2.0 * k) * s};
        const double g = (k2 + a2) / (2.0 * k) * s;
        out.t_prob = 1.0 / (1.0 + g * g);
        out.t_amp = back_phase / den;
        out.r_amp = -i * g / den;
      }
      break;
    }
    case Regime::above: {
      const double k1 = std::sqrt(c * (energy - v0));
      const double y = k1 * d;
      const double k2 = k * k;
      const double q2 = k1 * k1;
      const double s = d * snc(y);  // sin(k1 d)/k1
      const cplx den{std::cos(y), -(k2 + q2) / (2.0 * k) * s};
      const double g = (k2 - q2) / (2.0 * k) * s;
      out.t_prob = 1.0 / (1.0 + g * g);
      out.t_amp = back_phase / den;
      out.r_amp = -i * g / den;
      break;
    }
  }
  out.r_prob = 1.0 - out.t_prob;
  return out;
}

std::vector<double> resonance_energies(const RectangularBarrier& barrier, int n_max) {
  validate_barrier(barrier);
  if (barrier.d <= 0.0) throw ValidationError("resonance_energies requires d > 0");
  if (n_max < 1) throw ValidationError("resonance_energies requires n_max >= 1");
  const double scale = std::numbers::pi * std::numbers::pi * codata::hbar2_over_2me /
                       (barrier.mass.ratio * barrier.d * barrier.d);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    out.push_back(barrier.v0 + static_cast<double>(n) * n * scale);
  }
  return out;
}

}  // namespace tunnel
