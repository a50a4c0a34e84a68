#include "tunnel/wavepacket.hpp"

#include <fftw3.h>
#if defined(__SSE2__)
#include <pmmintrin.h>
#include <xmmintrin.h>
#endif

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double kinetic_energy(double k, EffectiveMass mass) {
  return codata::hbar2_over_2me * k * k / mass.ratio;
}

// Each spectrum bin stands for the cell [k - dk/2, k + dk/2]; this is the
// part of that cell with k > 0.
double rightward_share(double k, double dk) {
  return std::clamp((k + 0.5 * dk) / dk, 0.0, 1.0);
}

// F(x) = integral of the piecewise-linear density from x_min to x, given the
// running trapezoid sums cum[i] = F(x_i).
double cumulative_at(const std::vector<double>& rho, const std::vector<double>& cum,
                     const SpatialGrid& g, double x) {
  const double u = (x - g.x_min()) / g.dx();
  if (u <= 0.0) return 0.0;
  const auto last = g.size() - 1;
  if (u >= static_cast<double>(last)) return cum[last];
  const auto i = static_cast<std::size_t>(u);
  const double s = u - static_cast<double>(i);
  return cum[i] + g.dx() * s * (rho[i] + 0.5 * s * (rho[i + 1] - rho[i]));
}

struct DensityIntegral {
  std::vector<double> rho;
  std::vector<double> cum;

  explicit DensityIntegral(const WaveFunction& psi) {
    const auto a = psi.amplitudes();
    const double dx = psi.grid().dx();
    rho.resize(a.size());
    cum.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) rho[i] = std::norm(a[i]);
    cum[0] = 0.0;
    for (std::size_t i = 1; i < a.size(); ++i) cum[i] = cum[i - 1] + 0.5 * dx * (rho[i - 1] + rho[i]);
  }
};

// Packet tails decay into the subnormal range, where x86 arithmetic is ~100x
// slower. Flush them to zero while stepping; the previous mode is restored.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) {
    _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
    _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
}

}  // namespace

WaveFunction::WaveFunction(SpatialGrid grid, std::vector<cplx> amplitudes)
    : grid_(grid), psi_(std::move(amplitudes)) {
  if (psi_.size() != grid_.size()) {
    throw ValidationError("amplitude count does not match the grid");
  }
  refresh_norm();
}

double WaveFunction::refresh_norm() noexcept {
  double s = 0.0;
  for (const auto& a : psi_) s += std::norm(a);
  norm_ = s * grid_.dx();
  return norm_;
}

void WaveFunction::normalize() {
  if (!(norm_ > 0.0) || !std::isfinite(norm_)) throw NumericalError("cannot normalize a null state");
  const double f = 1.0 / std::sqrt(norm_);
  for (auto& a : psi_) a *= f;
  refresh_norm();
}

WaveFunction init_gaussian(const WavePacketSpec& spec, const SpatialGrid& grid) {
  check_finite(spec.x0, "x0");
  if (!(spec.sigma_x > 0.0) || !std::isfinite(spec.sigma_x)) {
    throw ValidationError("sigma_x must be positive");
  }
  if (!(spec.e0 > 0.0) || !std::isfinite(spec.e0)) throw ValidationError("e0 must be positive");
  if (spec.x0 - grid.x_min() < 5.0 * spec.sigma_x || grid.x_max() - spec.x0 < 5.0 * spec.sigma_x) {
    throw ValidationError("packet does not fit the grid (need 5 sigma_x to each wall)");
  }
  const double k0 = wavevector(spec.e0, spec.mass);
  std::vector<cplx> psi(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = grid.x(i) - spec.x0;
    psi[i] = std::exp(-u * u / (4.0 * spec.sigma_x * spec.sigma_x)) * std::polar(1.0, k0 * u);
  }
  WaveFunction w(grid, std::move(psi));
  w.normalize();
  return w;
}

double mean_position(const WaveFunction& psi) {
  const auto a = psi.amplitudes();
  double s = 0.0, m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = std::norm(a[i]);
    s += r;
    m += r * psi.grid().x(i);
  }
  return m / s;
}

double position_spread(const WaveFunction& psi) {
  const double mu = mean_position(psi);
  const auto a = psi.amplitudes();
  double s = 0.0, v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = std::norm(a[i]);
    const double u = psi.grid().x(i) - mu;
    s += r;
    v += r * u * u;
  }
  return std::sqrt(v / s);
}

double region_probability(const WaveFunction& psi, double a, double b) {
  const auto& g = psi.grid();
  if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
    throw ValidationError("region must satisfy a < b");
  }
  const double tol = 1e-9 * g.dx();
  if (a < g.x_min() - tol || b > g.x_max() + tol) throw ValidationError("region leaves the grid");
  const DensityIntegral d(psi);
  return cumulative_at(d.rho, d.cum, g, b) - cumulative_at(d.rho, d.cum, g, a);
}

std::vector<double> sample_potential(const PotentialProfile& profile, const SpatialGrid& grid) {
  std::vector<double> v(grid.size());
  const double h = 0.5 * grid.dx();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    v[i] = profile.cell_average(x - h, x + h);
  }
  return v;
}

CrankNicolson::CrankNicolson(const SpatialGrid& grid, std::vector<double> potential,
                             EffectiveMass mass, double dt)
    : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive and finite");
  const std::size_t n = grid.size();
  if (potential.size() != n) throw ValidationError("potential does not match the grid");
  const double t0 = codata::hbar2_over_2me / (mass.ratio * grid.dx() * grid.dx());
  const double tau = dt / (2.0 * codata::hbar);
  const cplx i_tau{0.0, tau};

  // A = 1 + i tau H (left), B = 1 - i tau H (right); H off-diagonal is -t0.
  const cplx a_off = -i_tau * t0;
  off_ = i_tau * t0;
  diag_rhs_.resize(n);
  c_prime_.resize(n);
  inv_pivot_.resize(n);
  scratch_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h_ii = 2.0 * t0 + potential[i];
    diag_rhs_[i] = 1.0 - i_tau * h_ii;
    const cplx b = 1.0 + i_tau * h_ii;
    const cplx pivot = i == 0 ? b : b - a_off * c_prime_[i - 1];
    inv_pivot_[i] = 1.0 / pivot;
    c_prime_[i] = a_off * inv_pivot_[i];
  }
}

void CrankNicolson::step(std::vector<cplx>& psi) const {
  const FlushDenormals ftz;
  const std::size_t n = psi.size();
  auto& d = scratch_;
  const cplx a_off = -off_;
  // d = B psi, then forward sweep in place.
  for (std::size_t i = 0; i < n; ++i) {
    cplx r = diag_rhs_[i] * psi[i];
    if (i > 0) r += off_ * psi[i - 1];
    if (i + 1 < n) r += off_ * psi[i + 1];
    d[i] = r;
  }
  d[0] *= inv_pivot_[0];
  for (std::size_t i = 1; i < n; ++i) d[i] = (d[i] - a_off * d[i - 1]) * inv_pivot_[i];
  psi[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) psi[i] = d[i] - c_prime_[i] * psi[i + 1];
}

double cfl_soft_limit(const SpatialGrid& grid, EffectiveMass mass) {
  return 10.0 * 2.0 * mass.absolute() * grid.dx() * grid.dx() / codata::hbar;
}

EvolveResult evolve(const WaveFunction& psi, const PotentialProfile& profile, double dt,
                    std::size_t n_steps) {
  if (!std::isfinite(dt)) throw ValidationError("dt must be finite");
  validate_profile(profile);
  EvolveResult out{psi};
  if (n_steps == 0) return out;
  const auto& g = psi.grid();
  const CrankNicolson cn(g, sample_potential(profile, g), profile.mass, dt);
  out.cfl_warning = dt > cfl_soft_limit(g, profile.mass);
  auto& data = out.psi.data();
  for (std::size_t s = 0; s < n_steps; ++s) cn.step(data);
  out.norm_drift = std::abs(out.psi.refresh_norm() - psi.norm());
  out.drift_flag = out.norm_drift > 1e-8;
  return out;
}

double MomentumSpectrum::total() const {
  double s = 0.0;
  for (double r : density) s += r;
  return s * dk;
}

double MomentumSpectrum::mean_k() const {
  double s = 0.0, m = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    s += density[j];
    m += density[j] * k[j];
  }
  return m / s;
}

double MomentumSpectrum::spread_k() const {
  const double mu = mean_k();
  double s = 0.0, v = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    s += density[j];
    v += density[j] * (k[j] - mu) * (k[j] - mu);
  }
  return std::sqrt(v / s);
}

MomentumSpectrum momentum_spectrum(const WaveFunction& psi, EffectiveMass mass) {
  const auto& g = psi.grid();
  const std::size_t n = g.size();
  std::vector<cplx> in(psi.amplitudes().begin(), psi.amplitudes().end());
  std::vector<cplx> out(n);
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw NumericalError("FFT plan creation failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  MomentumSpectrum s;
  s.mass = mass;
  s.dk = two_pi / (static_cast<double>(n) * g.dx());
  s.k.resize(n);
  s.density.resize(n);
  s.energy.resize(n);
  // |phi(k)|^2 = dx^2 / (2 pi) |sum psi_n exp(-i k x_n)|^2; the x_min phase drops out.
  const double scale = g.dx() * g.dx() / two_pi;
  const std::size_t neg = n / 2;  // bins with k < 0
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t m = (j + n - neg) % n;
    const double kj = (static_cast<double>(j) - static_cast<double>(neg)) * s.dk;
    s.k[j] = kj;
    s.density[j] = scale * std::norm(out[m]);
    s.energy[j] = kinetic_energy(kj, mass);
  }
  return s;
}

double spectral_transmission(const MomentumSpectrum& spectrum, const PotentialProfile& profile) {
  validate_profile(profile);
  const std::size_t n = spectrum.k.size();
  double peak = 0.0;
  for (double r : spectrum.density) peak = std::max(peak, r);
  const double cutoff = 1e-18 * peak;
  // Per-bin terms in parallel, summed serially in index order.
  std::vector<double> weight(n, 0.0), transmitted(n, 0.0);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (long long jj = 0; jj < count; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    const double kj = spectrum.k[j];
    const double share = rightward_share(kj, spectrum.dk);
    if (share == 0.0) continue;
    const double w = share * spectrum.density[j];
    weight[j] = w;
    if (w < cutoff) continue;
    // The k = 0 cell contributes its positive half, evaluated at its midpoint.
    const double e = kj > 0.0 ? spectrum.energy[j] : kinetic_energy(0.25 * spectrum.dk, spectrum.mass);
    transmitted[j] = w * solve(profile, profile.lead_height + e).transmission.t_prob;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    num += transmitted[j];
    den += weight[j];
  }
  if (!(den > 0.0)) throw NumericalError("spectrum has no rightward weight");
  return num / den;
}

double classical_filter_fraction(const MomentumSpectrum& spectrum, double v0) {
  if (std::isnan(v0)) throw ValidationError("v0 must not be NaN");
  const double k_thr = v0 > 0.0 ? std::sqrt(v0 * spectrum.mass.ratio / codata::hbar2_over_2me) : 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < spectrum.k.size(); ++j) {
    const double kj = spectrum.k[j];
    const double share = rightward_share(kj, spectrum.dk);
    if (share == 0.0) continue;
    const double w = spectrum.density[j];
    den += share * w;
    const double above = std::clamp((kj + 0.5 * spectrum.dk - k_thr) / spectrum.dk, 0.0, share);
    num += w * above;
  }
  if (!(den > 0.0)) throw NumericalError("spectrum has no rightward weight");
  return num / den;
}

RunSettings suggest_run_settings(const WavePacketSpec& spec, const PotentialProfile& profile) {
  validate_profile(profile);
  const double k0 = wavevector(spec.e0, spec.mass);
  const double k_max = k0 + 5.0 / (2.0 * spec.sigma_x);
  const double dx = two_pi / (20.0 * k_max);
  const double m = spec.mass.absolute();
  const double v0 = codata::hbar * k0 / m;
  const double length = profile.total_width();
  const double t_clear = (length - spec.x0 + 4.0 * spec.sigma_x) / v0;

  RunSettings run;
  run.t_max = 2.0 * t_clear + 4.0;
  const double spread_rate = codata::hbar / (2.0 * m * spec.sigma_x);
  const double sigma_end = std::hypot(spec.sigma_x, spread_rate * run.t_max);
  const double travel = v0 * run.t_max;
  const double x_hi = std::max(length, spec.x0) + travel + 10.0 * sigma_end;
  const double x_lo = std::min(0.0, spec.x0) - travel - 10.0 * sigma_end;
  const auto n = static_cast<std::size_t>(std::ceil((x_hi - x_lo) / dx)) + 1;
  run.grid = SpatialGrid(x_lo, x_hi, n);
  run.dt = 0.2 * codata::hbar / kinetic_energy(k_max, spec.mass);
  run.record_interval = std::max(run.dt, 0.02);
  return run;
}

ModelComparison compare_models(const WavePacketSpec& spec, const PotentialProfile& profile,
                               const RunSettings& run) {
  validate_profile(profile);
  if (!(spec.mass == profile.mass)) throw ValidationError("packet and profile masses differ");
  if (!(run.t_max > 0.0) || !std::isfinite(run.t_max)) throw ValidationError("t_max must be positive");
  if (!(run.record_interval > 0.0)) throw ValidationError("record_interval must be positive");
  if (!(run.settle_rate > 0.0)) throw ValidationError("settle_rate must be positive");
  const auto& g = run.grid;
  const double length = profile.total_width();
  if (g.x_min() >= 0.0 || g.x_max() <= length) {
    throw ValidationError("grid must extend past both sides of the profile");
  }

  WaveFunction psi = init_gaussian(spec, g);
  if (region_probability(psi, 0.0, g.x_max()) >= 1e-8) {
    throw ValidationError("packet is not fully left of the barrier (x >= 0 mass >= 1e-8)");
  }

  ModelComparison out;
  out.barrier_left = 0.0;
  out.barrier_right = length;
  out.x0 = spec.x0;
  const double k0 = wavevector(spec.e0, spec.mass);
  out.group_velocity = codata::hbar * k0 / spec.mass.absolute();

  const auto spectrum = momentum_spectrum(psi, spec.mass);
  out.t_spec = spectral_transmission(spectrum, profile);
  out.classical = classical_filter_fraction(spectrum, profile.max_height() - profile.lead_height);

  const CrankNicolson cn(g, sample_potential(profile, g), spec.mass, run.dt);
  if (run.dt > cfl_soft_limit(g, spec.mass)) {
    out.warnings.push_back("dt exceeds the soft stability guide 20 m* dx^2 / hbar");
  }
  const double norm0 = psi.norm();
  const auto record_every = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(run.record_interval / run.dt)));
  const auto lag = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(1.0 / (run.dt * static_cast<double>(record_every)))));
  const double t_clear = (length - spec.x0 + 4.0 * spec.sigma_x) / out.group_velocity;
  const auto n_total = static_cast<std::size_t>(std::ceil(run.t_max / run.dt));
  const std::size_t wall_band = std::max<std::size_t>(4, g.size() / 50);

  std::vector<double> snaps = run.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  bool wall_warned = false;
  double stop_at = run.t_max;

  auto sample = [&](double t) {
    const DensityIntegral d(psi);
    TimeSample s;
    s.t = t;
    s.norm = d.cum.back();
    const double f0 = cumulative_at(d.rho, d.cum, g, 0.0);
    const double fl = cumulative_at(d.rho, d.cum, g, length);
    s.prob_left = f0;
    s.prob_barrier = fl - f0;
    s.prob_right = s.norm - fl;
    double m = 0.0, tot = 0.0, mr = 0.0, totr = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.x(i);
      m += x * d.rho[i];
      tot += d.rho[i];
      if (x > length) {
        mr += x * d.rho[i];
        totr += d.rho[i];
      }
    }
    s.x_mean = m / tot;
    s.x_right_mean = totr > 0.0 ? mr / totr : length;
    double edge = 0.0;
    for (std::size_t i = 0; i < wall_band; ++i) edge += d.rho[i] + d.rho[g.size() - 1 - i];
    if (!wall_warned && edge * g.dx() > 1e-6) {
      wall_warned = true;
      out.warnings.push_back("packet reached the walls; enlarge the grid");
    }
    out.max_norm_drift = std::max(out.max_norm_drift, std::abs(s.norm - norm0));
    return s;
  };
  auto take_snapshots = [&](double t) {
    while (next_snap < snaps.size() && snaps[next_snap] <= t + 0.5 * run.dt) {
      Snapshot sn;
      sn.t = t;
      sn.x.resize(g.size());
      sn.density.resize(g.size());
      const auto a = psi.amplitudes();
      for (std::size_t i = 0; i < g.size(); ++i) {
        sn.x[i] = g.x(i);
        sn.density[i] = std::norm(a[i]);
      }
      out.snapshots.push_back(std::move(sn));
      ++next_snap;
    }
  };

  out.series.push_back(sample(0.0));
  take_snapshots(0.0);
  std::size_t step = 0;
  auto& data = psi.data();
  while (step < n_total) {
    cn.step(data);
    ++step;
    const double t = static_cast<double>(step) * run.dt;
    take_snapshots(t);
    if (step % record_every != 0 && step != n_total) continue;
    psi.refresh_norm();
    out.series.push_back(sample(t));
    const auto& cur = out.series.back();
    if (!out.settled && t >= t_clear && out.series.size() > lag) {
      const auto& prev = out.series[out.series.size() - 1 - lag];
      const double rate = std::abs(cur.prob_right - prev.prob_right) / (cur.t - prev.t);
      if (rate < run.settle_rate) {
        out.settled = true;
        out.settle_time = t;
        out.exact = cur.prob_right;
        stop_at = std::min(run.t_max, t + run.post_settle_time);
      }
    }
    if (t >= stop_at - 0.5 * run.dt) break;
  }
  psi.refresh_norm();
  out.end_time = out.series.back().t;
  if (!out.settled) {
    out.exact = out.series.back().prob_right;
    out.warnings.push_back("run did not settle: transmitted probability still changing by more than "
                           "the settle rate at t_max");
  }
  if (next_snap < snaps.size()) out.warnings.push_back("snapshot times after the end of the run were skipped");
  if (out.max_norm_drift > 1e-8) out.warnings.push_back("norm drift exceeded 1e-8");

  out.exact = std::clamp(out.exact, 0.0, 1.0);
  out.t_spec = std::clamp(out.t_spec, 0.0, 1.0);
  out.exact_minus_spec = out.exact - out.t_spec;
  out.exact_minus_classical = out.exact - out.classical;
  out.spec_minus_classical = out.t_spec - out.classical;
  return out;
}

}  // namespace tunnel
