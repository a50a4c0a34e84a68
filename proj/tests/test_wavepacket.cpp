#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tunnel/errors.hpp"
#include "tunnel/wavepacket.hpp"

using namespace tunnel;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double hbar = codata::hbar;

// Exact free-particle Gaussian, sigma_x(0) = s, normalized.
cplx free_gaussian(double x, double t, double x0, double s, double k0, double m) {
  const cplx a = 1.0 + cplx{0.0, hbar * t / (2.0 * m * s * s)};
  const double v = hbar * k0 / m;
  const double u = x - x0 - v * t;
  const double phase = k0 * (x - x0) - 0.5 * hbar * k0 * k0 * t / m;
  return std::pow(2.0 * pi * s * s, -0.25) / std::sqrt(a) *
         std::exp(-u * u / (4.0 * s * s * a) + cplx{0.0, phase});
}

}  // namespace

TEST_CASE("init_gaussian") {
  const SpatialGrid g(-60.0, 60.0, 16384);
  const WavePacketSpec spec{0.0, 1.0, 1.0, EffectiveMass(1.0)};
  const auto psi = init_gaussian(spec, g);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(position_spread(psi) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(mean_position(psi)) < 1e-10);
  const auto sp = momentum_spectrum(psi, spec.mass);
  // hbar / (2 * 1 nm)
  CHECK(hbar * sp.spread_k() == doctest::Approx(0.3291059784754533).epsilon(1e-4));
  CHECK(position_spread(psi) * hbar * sp.spread_k() == doctest::Approx(hbar / 2.0).epsilon(1e-4));
  CHECK(sp.mean_k() == doctest::Approx(wavevector(1.0, spec.mass)).epsilon(1e-8));

  CHECK_THROWS_AS(init_gaussian({-57.0, 1.0, 1.0, EffectiveMass(1.0)}, g), ValidationError);
  CHECK_THROWS_AS(init_gaussian({57.0, 1.0, 1.0, EffectiveMass(1.0)}, g), ValidationError);
  CHECK_THROWS_AS(init_gaussian({0.0, 0.0, 1.0, EffectiveMass(1.0)}, g), ValidationError);
  CHECK_THROWS_AS(init_gaussian({0.0, 1.0, -1.0, EffectiveMass(1.0)}, g), ValidationError);
}

TEST_CASE("property: minimum uncertainty for any width") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> width(0.5, 3.0);
  std::uniform_real_distribution<double> energy(0.05, 2.0);
  for (int i = 0; i < 20; ++i) {
    const WavePacketSpec spec{0.0, width(rng), energy(rng), EffectiveMass(0.2)};
    const auto psi = init_gaussian(spec, SpatialGrid(-80.0, 80.0, 16384));
    const double product = position_spread(psi) * momentum_spectrum(psi, spec.mass).spread_k();
    CHECK(product >= 0.5 * (1.0 - 1e-10));
    CHECK(product == doctest::Approx(0.5).epsilon(1e-4));
  }
}

TEST_CASE("free evolution follows the analytic Gaussian") {
  const EffectiveMass mass(1.0);
  const SpatialGrid g(-50.0, 50.0, 8192);
  const WavePacketSpec spec{-20.0, 1.0, 1.0, mass};
  const auto psi0 = init_gaussian(spec, g);
  const double dt = 0.002;
  const std::size_t steps = 5000;  // 10 fs
  const auto r = evolve(psi0, PotentialProfile::free(mass), dt, steps);
  const double t = dt * static_cast<double>(steps);
  const double m = mass.absolute();
  const double k0 = wavevector(1.0, mass);
  const double v = hbar * k0 / m;

  CHECK_FALSE(r.drift_flag);
  CHECK(r.norm_drift <= 1e-8);
  CHECK(mean_position(r.psi) - spec.x0 == doctest::Approx(v * t).epsilon(1e-2));
  const double s_t = std::hypot(1.0, hbar * t / (2.0 * m * 1.0));
  CHECK(position_spread(r.psi) == doctest::Approx(s_t).epsilon(1e-2));

  double peak = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double exact = std::norm(free_gaussian(g.x(i), t, spec.x0, 1.0, k0, m));
    peak = std::max(peak, exact);
    worst = std::max(worst, std::abs(std::norm(r.psi.amplitudes()[i]) - exact));
  }
  CHECK(worst < 1e-2 * peak);
}

TEST_CASE("evolve edge cases") {
  const SpatialGrid g(-30.0, 30.0, 1024);
  const auto psi = init_gaussian({0.0, 1.0, 0.5, EffectiveMass(1.0)}, g);
  const auto same = evolve(psi, PotentialProfile::free(), 0.01, 0);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(same.psi.amplitudes()[i] == psi.amplitudes()[i]);
  CHECK(same.norm_drift == 0.0);
  CHECK_THROWS_AS(evolve(psi, PotentialProfile::free(), NAN, 3), ValidationError);
  CHECK_THROWS_AS(evolve(psi, PotentialProfile::free(), -0.1, 3), ValidationError);
  CHECK(evolve(psi, PotentialProfile::free(), 50.0, 1).cfl_warning);
  CHECK_FALSE(evolve(psi, PotentialProfile::free(), 0.01, 1).cfl_warning);
}

TEST_CASE("property: norm is conserved through barriers") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  const SpatialGrid g(-40.0, 40.0, 4096);
  for (int i = 0; i < 10; ++i) {
    const EffectiveMass mass(0.1 * u(rng));
    PotentialProfile p;
    p.mass = mass;
    p.segments = {{u(rng), u(rng)}, {u(rng), -0.3 * u(rng)}, {u(rng), u(rng)}};
    const auto psi = init_gaussian({-15.0, 1.0 + 0.2 * u(rng), u(rng), mass}, g);
    const auto r = evolve(psi, p, 0.005, 2000);
    CHECK(r.norm_drift <= 1e-8);
    CHECK_FALSE(r.drift_flag);
  }
}

TEST_CASE("region_probability") {
  const SpatialGrid g(-40.0, 40.0, 4001);
  const auto psi = init_gaussian({-10.0, 1.0, 1.0, EffectiveMass(1.0)}, g);
  CHECK(region_probability(psi, g.x_min(), g.x_max()) == doctest::Approx(1.0).epsilon(1e-8));
  const double left = region_probability(psi, g.x_min(), -10.3);
  const double mid = region_probability(psi, -10.3, -9.137);
  const double right = region_probability(psi, -9.137, g.x_max());
  CHECK(std::abs(left + mid + right - region_probability(psi, g.x_min(), g.x_max())) < 1e-10);
  // 8 sigma and beyond: Gaussian tail integral is ~1e-15
  CHECK(region_probability(psi, -2.0, g.x_max()) < 1e-10);
  // Trapezoid of the same Gaussian over one sigma either side: erf(1/sqrt 2).
  CHECK(region_probability(psi, -11.0, -9.0) == doctest::Approx(0.6826894921370859).epsilon(1e-5));
  CHECK_THROWS_AS(region_probability(psi, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(region_probability(psi, -50.0, 0.0), ValidationError);
  CHECK_THROWS_AS(region_probability(psi, 0.0, 41.0), ValidationError);
}

TEST_CASE("momentum_spectrum") {
  SUBCASE("Gaussian Fourier pair") {
    const double s = 1.3;
    const EffectiveMass mass(0.5);
    const SpatialGrid g(-100.0, 100.0, 8192);
    const auto psi = init_gaussian({3.0, s, 2.0, mass}, g);
    const auto sp = momentum_spectrum(psi, mass);
    const double k0 = wavevector(2.0, mass);
    double worst = 0.0;
    for (std::size_t j = 0; j < sp.k.size(); ++j) {
      const double q = sp.k[j] - k0;
      const double exact = std::sqrt(2.0 * s * s / pi) * std::exp(-2.0 * s * s * q * q);
      worst = std::max(worst, std::abs(sp.density[j] - exact));
      CHECK(sp.density[j] >= 0.0);
      CHECK(sp.energy[j] == doctest::Approx(codata::hbar2_over_2me * sp.k[j] * sp.k[j] / 0.5));
    }
    CHECK(worst < 1e-10);
    CHECK(sp.total() == doctest::Approx(psi.norm()).epsilon(1e-12));
    CHECK(sp.spread_k() == doctest::Approx(1.0 / (2.0 * s)).epsilon(1e-8));
    for (std::size_t j = 1; j < sp.k.size(); ++j) CHECK(sp.k[j] > sp.k[j - 1]);
  }
  SUBCASE("real state has a symmetric spectrum") {
    const SpatialGrid g(-20.0, 30.0, 1000);
    std::vector<cplx> a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.x(i);
      a[i] = std::exp(-x * x / 8.0) * (1.0 + 0.3 * std::cos(2.1 * x)) + 0.2 * std::exp(-(x - 4) * (x - 4));
    }
    WaveFunction psi(g, a);
    psi.normalize();
    const auto sp = momentum_spectrum(psi, EffectiveMass(1.0));
    const std::size_t zero = g.size() / 2;
    CHECK(sp.k[zero] == 0.0);
    for (std::size_t j = 1; j < zero; ++j) {
      CHECK(sp.density[zero + j] == doctest::Approx(sp.density[zero - j]).epsilon(1e-12));
    }
  }
  SUBCASE("peak bin sits at the grid k nearest k0") {
    const SpatialGrid g(-50.0, 50.0, 2048);
    const EffectiveMass mass(1.0);
    const auto psi = init_gaussian({0.0, 3.0, 0.8, mass}, g);
    const auto sp = momentum_spectrum(psi, mass);
    const double k0 = wavevector(0.8, mass);
    std::size_t peak = 0, nearest = 0;
    for (std::size_t j = 0; j < sp.k.size(); ++j) {
      if (sp.density[j] > sp.density[peak]) peak = j;
      if (std::abs(sp.k[j] - k0) < std::abs(sp.k[nearest] - k0)) nearest = j;
    }
    CHECK(peak == nearest);
  }
  SUBCASE("property: Parseval on random states") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 20; ++trial) {
      const SpatialGrid g(-10.0, 10.0, 64 + 37 * static_cast<std::size_t>(trial));
      std::vector<cplx> a(g.size());
      for (auto& v : a) v = {n01(rng), n01(rng)};
      WaveFunction psi(g, a);
      psi.normalize();
      CHECK(momentum_spectrum(psi, EffectiveMass(1.0)).total() == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("spectral_transmission") {
  SUBCASE("free profile") {
    const SpatialGrid g(-40.0, 40.0, 4096);
    const auto psi = init_gaussian({-10.0, 1.0, 1.0, EffectiveMass(1.0)}, g);
    const auto sp = momentum_spectrum(psi, EffectiveMass(1.0));
    CHECK(spectral_transmission(sp, PotentialProfile::free()) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("opaque barrier with a narrow spectrum") {
    const EffectiveMass mass(1.0);
    const double e0 = 1.0, v0 = 3.1, d = 2.0, s = 8.0;
    const RectangularBarrier b{v0, d, mass};
    const SpatialGrid g(-150.0, 150.0, 16384);
    const auto sp = momentum_spectrum(init_gaussian({0.0, s, e0, mass}, g), mass);
    const double t_spec = spectral_transmission(sp, PotentialProfile::barrier(v0, d, mass));
    // T as a function of k, second derivative by central differences.
    const double k0 = wavevector(e0, mass);
    const double h = 1e-3;
    auto t_of_k = [&](double k) {
      return transmission(codata::hbar2_over_2me * k * k, b).t_prob;
    };
    const double t0 = t_of_k(k0);
    const double t2 = (t_of_k(k0 + h) - 2.0 * t0 + t_of_k(k0 - h)) / (h * h);
    const double sigma_k = 1.0 / (2.0 * s);
    const double second_order = 0.5 * t2 * sigma_k * sigma_k;
    CHECK(std::abs(t_spec - t0) <= 2.0 * std::abs(second_order));
    CHECK(t_spec == doctest::Approx(t0 + second_order).epsilon(0.05));
  }
}

TEST_CASE("classical_filter_fraction") {
  const EffectiveMass mass(1.0);
  const SpatialGrid g(-200.0, 200.0, 16384);
  SUBCASE("limits") {
    const auto sp = momentum_spectrum(init_gaussian({0.0, 1.0, 2.0, mass}, g), mass);
    CHECK(classical_filter_fraction(sp, 0.0) == 1.0);
    CHECK(classical_filter_fraction(sp, -1.0) == 1.0);
    CHECK(classical_filter_fraction(sp, 1e9) == 0.0);
  }
  SUBCASE("e0 equal to v0 is not one half") {
    // Quadrature of the k-Gaussian (sigma_k = 1/2) over k > k0 relative to
    // k > 0, evaluated at 30 digits: 0.5 / P(k > 0).
    for (auto [k0, expected] : {std::pair{1.0, 0.5116398746584291}, std::pair{2.0, 0.5000158361224662}}) {
      const double e0 = codata::hbar2_over_2me * k0 * k0;
      const auto sp = momentum_spectrum(init_gaussian({0.0, 1.0, e0, mass}, g), mass);
      // Bin sums carry an O(dk^2) midpoint error, dk = 2 pi / 400 nm.
      CHECK(classical_filter_fraction(sp, e0) == doctest::Approx(expected).epsilon(2e-5));
      CHECK(classical_filter_fraction(sp, e0) > 0.5);
    }
  }
  SUBCASE("monotone in v0") {
    const auto sp = momentum_spectrum(init_gaussian({0.0, 1.0, 1.0, mass}, g), mass);
    double prev = 1.0;
    for (double v0 = 0.05; v0 < 4.0; v0 += 0.05) {
      const double f = classical_filter_fraction(sp, v0);
      CHECK(f <= prev);
      CHECK(f >= 0.0);
      prev = f;
    }
  }
}

TEST_CASE("suggest_run_settings follows the resolution rule") {
  const EffectiveMass mass(0.07);
  const WavePacketSpec spec{-15.0, 1.0, 5.0, mass};
  const auto run = suggest_run_settings(spec, PotentialProfile::barrier(3.1, 1.0, mass));
  const double k_max = wavevector(5.0, mass) + 2.5;
  CHECK(run.grid.dx() <= 2.0 * pi / (20.0 * k_max));
  CHECK(run.grid.x_min() < spec.x0 - 10.0);
  CHECK(run.grid.x_max() > 1.0 + 10.0);
  CHECK(run.dt > 0.0);
}

TEST_CASE("compare_models") {
  SUBCASE("spectral average matches the time-domain result") {
    const EffectiveMass mass(0.07);
    const WavePacketSpec spec{-15.0, 1.0, 5.0, mass};
    const auto p = PotentialProfile::barrier(3.1, 1.0, mass);
    const auto r = compare_models(spec, p, suggest_run_settings(spec, p));
    CHECK(r.settled);
    CHECK(r.warnings.empty());
    CHECK(r.max_norm_drift <= 1e-8);
    CHECK(r.exact == doctest::Approx(r.t_spec).epsilon(0.02));
    CHECK(r.exact_minus_spec == doctest::Approx(r.exact - r.t_spec));
    CHECK(r.classical > r.exact);
    for (const auto& s : r.series) {
      CHECK(std::abs(s.norm - 1.0) < 1e-8);
      CHECK(s.prob_left + s.prob_barrier + s.prob_right == doctest::Approx(s.norm).epsilon(1e-12));
    }
  }
  SUBCASE("deep tunneling: the classical filter is the outlier") {
    const EffectiveMass mass(0.07);
    const WavePacketSpec spec{-15.0, 1.0, 1.5, mass};
    const auto p = PotentialProfile::barrier(3.1, 1.0, mass);
    const auto r = compare_models(spec, p, suggest_run_settings(spec, p));
    CHECK(r.settled);
    CHECK(r.exact == doctest::Approx(r.t_spec).epsilon(0.02));
    CHECK(std::abs(r.exact_minus_classical) > 10.0 * std::abs(r.exact_minus_spec));
  }
  SUBCASE("high energy: everything crosses") {
    const EffectiveMass mass(0.07);
    const WavePacketSpec spec{-15.0, 1.0, 50.0 * 3.1, mass};
    const auto p = PotentialProfile::barrier(3.1, 1.0, mass);
    const auto r = compare_models(spec, p, suggest_run_settings(spec, p));
    CHECK(r.settled);
    CHECK(r.exact > 0.99);
    CHECK(r.t_spec > 0.99);
    CHECK(r.classical > 0.99);
  }
  SUBCASE("free profile") {
    const EffectiveMass mass(1.0);
    const WavePacketSpec spec{-15.0, 1.0, 2.0, mass};
    const auto p = PotentialProfile::free(mass);
    const auto r = compare_models(spec, p, suggest_run_settings(spec, p));
    // Measured at the settle time, so slow components still behind x = 0 are
    // bounded by the 1e-4 per fs settle rate.
    CHECK(r.exact == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.t_spec == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.classical == 1.0);
  }
  SUBCASE("unsettled run is flagged") {
    const EffectiveMass mass(0.07);
    const WavePacketSpec spec{-15.0, 1.0, 5.0, mass};
    const auto p = PotentialProfile::barrier(3.1, 1.0, mass);
    auto run = suggest_run_settings(spec, p);
    run.t_max = 3.5;
    const auto r = compare_models(spec, p, run);
    CHECK_FALSE(r.settled);
    CHECK_FALSE(r.warnings.empty());
  }
  SUBCASE("snapshots") {
    const EffectiveMass mass(1.0);
    const WavePacketSpec spec{-15.0, 1.0, 2.0, mass};
    const auto p = PotentialProfile::barrier(1.0, 0.5, mass);
    auto run = suggest_run_settings(spec, p);
    run.snapshot_times = {0.0, 1.0, 1e6};
    const auto r = compare_models(spec, p, run);
    REQUIRE(r.snapshots.size() == 2);
    CHECK(r.snapshots[1].t == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(r.snapshots[0].x.size() == run.grid.size());
    CHECK_FALSE(r.warnings.empty());
  }
  SUBCASE("rejections") {
    const EffectiveMass mass(0.07);
    const auto p = PotentialProfile::barrier(3.1, 1.0, mass);
    const WavePacketSpec close{-2.0, 1.0, 5.0, mass};
    CHECK_THROWS_AS(compare_models(close, p, suggest_run_settings(close, p)), ValidationError);
    const WavePacketSpec other{-15.0, 1.0, 5.0, EffectiveMass(1.0)};
    CHECK_THROWS_AS(compare_models(other, p, suggest_run_settings(other, p)), ValidationError);
  }
}
