#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "tunnel/transfer_matrix.hpp"
#include "tunnel/units.hpp"

namespace tunnel {

/// Gaussian packet moving right. sigma_x is the position standard deviation,
/// so the initial state has dx*dp = hbar/2.
struct WavePacketSpec {
  double x0 = 0.0;       // nm
  double sigma_x = 1.0;  // nm
  double e0 = 1.0;       // eV, central kinetic energy
  EffectiveMass mass{};
};

class WaveFunction {
 public:
  WaveFunction(SpatialGrid grid, std::vector<cplx> amplitudes);

  const SpatialGrid& grid() const noexcept { return grid_; }
  std::span<const cplx> amplitudes() const noexcept { return psi_; }
  /// Mutable access; call refresh_norm() after modifying.
  std::vector<cplx>& data() noexcept { return psi_; }

  /// sum |psi_i|^2 dx, cached.
  double norm() const noexcept { return norm_; }
  double refresh_norm() noexcept;
  void normalize();

 private:
  SpatialGrid grid_;
  std::vector<cplx> psi_;
  double norm_ = 0.0;
};

WaveFunction init_gaussian(const WavePacketSpec& spec, const SpatialGrid& grid);

double mean_position(const WaveFunction& psi);
double position_spread(const WaveFunction& psi);

/// Trapezoidal integral of |psi|^2 over [a, b] (linear interpolation of the
/// density between grid points, so adjacent intervals add exactly).
double region_probability(const WaveFunction& psi, double a, double b);

/// Cell-averaged potential at every grid point.
std::vector<double> sample_potential(const PotentialProfile& profile, const SpatialGrid& grid);

/// Implicit-midpoint propagator for H = -hbar^2/(2m*) d^2/dx^2 + V with
/// second-order central differences and hard walls beyond both grid ends.
/// The tridiagonal factorization is built once and reused for every step.
class CrankNicolson {
 public:
  CrankNicolson(const SpatialGrid& grid, std::vector<double> potential, EffectiveMass mass,
                double dt);

  void step(std::vector<cplx>& psi) const;
  double dt() const noexcept { return dt_; }

 private:
  double dt_;
  cplx off_;                     // i*tau*H_{i,i+1}, tau = dt/(2 hbar)
  std::vector<cplx> diag_rhs_;   // 1 - i*tau*H_ii
  std::vector<cplx> c_prime_;    // Thomas forward coefficients
  std::vector<cplx> inv_pivot_;  // 1 / modified diagonal
  mutable std::vector<cplx> scratch_;
};

/// dt above which evolve() emits a soft warning (10 x 2 m* dx^2 / hbar).
double cfl_soft_limit(const SpatialGrid& grid, EffectiveMass mass);

struct EvolveResult {
  WaveFunction psi;
  double norm_drift = 0.0;
  bool drift_flag = false;   // drift exceeded 1e-8
  bool cfl_warning = false;  // dt above the soft limit
};

EvolveResult evolve(const WaveFunction& psi, const PotentialProfile& profile, double dt,
                    std::size_t n_steps);

struct MomentumSpectrum {
  std::vector<double> k;        // nm^-1, ascending, signed
  std::vector<double> density;  // |phi(k)|^2, nm
  std::vector<double> energy;   // hbar^2 k^2 / (2 m*), eV
  double dk = 0.0;
  EffectiveMass mass{};

  double total() const;  // sum density * dk
  double mean_k() const;
  double spread_k() const;
};

MomentumSpectrum momentum_spectrum(const WaveFunction& psi, EffectiveMass mass);

/// Rightward-weighted average of T(E(k)) over the spectrum, with T from the
/// scattering solver at total energy lead_height + E(k).
double spectral_transmission(const MomentumSpectrum& spectrum, const PotentialProfile& profile);

/// Rightward probability fraction with E(k) > v0. The bin that contains the
/// threshold contributes the fraction of its width above it.
double classical_filter_fraction(const MomentumSpectrum& spectrum, double v0);

struct RunSettings {
  SpatialGrid grid{-100.0, 100.0, 8192};
  double dt = 0.005;               // fs
  double t_max = 50.0;             // fs, hard stop
  double record_interval = 0.05;   // fs
  double settle_rate = 1e-4;       // per fs
  double post_settle_time = 1.0;   // fs kept running after settling
  std::vector<double> snapshot_times;
};

/// Resolution rule: dx <= 2 pi / (20 k_max), k_max = k0 + 5/(2 sigma_x), and
/// a domain wide enough that both outgoing packets stay >= 10 sigma(t) from
/// the walls until t_max.
RunSettings suggest_run_settings(const WavePacketSpec& spec, const PotentialProfile& profile);

struct TimeSample {
  double t = 0.0;
  double norm = 0.0;
  double prob_left = 0.0;     // x < 0
  double prob_barrier = 0.0;  // 0 <= x <= L
  double prob_right = 0.0;    // x > L
  double x_mean = 0.0;
  double x_right_mean = 0.0;  // centroid of the x > L part
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> density;
};

struct ModelComparison {
  double exact = 0.0;       // time-domain transmitted probability
  double t_spec = 0.0;      // spectral average of T(E)
  double classical = 0.0;   // classical filter fraction
  double exact_minus_spec = 0.0;
  double exact_minus_classical = 0.0;
  double spec_minus_classical = 0.0;
  bool settled = false;
  double settle_time = 0.0;
  double end_time = 0.0;
  double max_norm_drift = 0.0;
  double barrier_left = 0.0;
  double barrier_right = 0.0;
  double group_velocity = 0.0;  // hbar k0 / m*
  double x0 = 0.0;
  std::vector<TimeSample> series;
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
};

ModelComparison compare_models(const WavePacketSpec& spec, const PotentialProfile& profile,
                               const RunSettings& run);

}  // namespace tunnel
