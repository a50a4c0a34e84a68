#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tunnel/wavepacket.hpp"

namespace tunnel {

/// Order-of-magnitude chain with these working conventions:
/// dp*dx = hbar, p ~ dp, dE = dp^2 / m* (no factor 1/2), dt*dE = hbar.
struct UncertaintyReport {
  double delta_x = 0.0;     // nm
  double delta_p = 0.0;     // eV*fs/nm
  double delta_p_si = 0.0;  // kg*m/s
  double p_assumed = 0.0;   // eV*fs/nm
  double delta_e = 0.0;     // eV
  double delta_t = 0.0;     // fs
  double delta_t_si = 0.0;  // s
  EffectiveMass mass{};
  std::string convention = "paper convention: dp*dx = hbar, dE = dp^2/m*, dt*dE = hbar";
};

UncertaintyReport paper_estimate(double delta_x, EffectiveMass mass);

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct Observable {
  SpatialGrid grid;
  SparseMatrix matrix;
  std::string label;

  /// max |M - M^dagger| over all entries.
  double hermiticity_residual() const;
  /// <psi|M|psi> with the grid inner product sum conj(a) b dx.
  cplx expectation(const WaveFunction& psi) const;
};

Observable position_observable(const SpatialGrid& grid);
/// -i hbar times the central first difference, zero beyond both ends.
Observable momentum_observable(const SpatialGrid& grid);

struct RobertsonResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double delta_a = 0.0;
  double delta_b = 0.0;
  double lhs = 0.0;  // delta_a * delta_b
  double rhs = 0.0;  // |<[A, B]>| / 2
  bool holds = false;
  std::vector<std::string> warnings;
};

RobertsonResult robertson_check(const WaveFunction& psi, const Observable& a, const Observable& b);

/// i.i.d. complex Gaussian amplitudes, normalized.
WaveFunction random_state(const SpatialGrid& grid, std::mt19937_64& rng);

struct EnsembleResult {
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::vector<double> samples_a;
  std::vector<double> samples_b;
  double delta_a = 0.0;  // sample standard deviations
  double delta_b = 0.0;
  double product = 0.0;
};

inline constexpr std::size_t ensemble_min_samples = 100;
inline constexpr std::size_t ensemble_max_grid = 2048;

/// Projective measurements of A on n copies and B on another n copies, with
/// outcomes drawn from the Born weights over each observable's eigenbasis.
EnsembleResult ensemble_demo(const WaveFunction& psi, const Observable& a, const Observable& b,
                             std::size_t n_samples, std::uint64_t seed);

}  // namespace tunnel
