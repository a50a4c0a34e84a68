#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles/numerov.hpp"
#include "tunnel/errors.hpp"
#include "tunnel/timing.hpp"

using namespace tunnel;

namespace {

constexpr double hbar = codata::hbar;

PotentialProfile si_sio2() { return PotentialProfile::barrier(3.1, 1.0, EffectiveMass(0.07)); }

// Closed-form dwell time of a rectangular barrier below its top
// (Buttiker 1983), written out independently of the library.
double dwell_closed_form(double e, double v0, double d, double ratio) {
  const double m = ratio * codata::electron_mass;
  const double k = std::sqrt(2.0 * m * e) / hbar;
  const double kappa = std::sqrt(2.0 * m * (v0 - e)) / hbar;
  const double k02 = k * k + kappa * kappa;
  const double sh = std::sinh(kappa * d);
  const double num = 2.0 * kappa * d * (kappa * kappa - k * k) + k02 * std::sinh(2.0 * kappa * d);
  const double den = 4.0 * k * k * kappa * kappa + k02 * k02 * sh * sh;
  return m * k / (hbar * kappa) * num / den;
}

// Phase of the exit-referred amplitude from the closed-form solver.
double exit_phase(double e, const RectangularBarrier& b) {
  const double k = wavevector(e, b.mass);
  return std::arg(transmission(e, b).t_amp * std::polar(1.0, k * b.d));
}

double simpson(const std::vector<double>& x, const std::vector<double>& f) {
  const std::size_t n = x.size() - 1;  // even number of intervals
  const double h = x[1] - x[0];
  double s = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("phase_time") {
  SUBCASE("empty profile has no delay") {
    const auto r = phase_time(PotentialProfile::free(), 1.0);
    CHECK(r.tau == 0.0);
    CHECK(r.converged);
  }
  SUBCASE("flat segment is free flight") {
    PotentialProfile p;
    p.mass = EffectiveMass(0.3);
    p.segments = {{4.0, 0.0}};
    const double e = 0.8;
    const double v = hbar * wavevector(e, p.mass) / p.mass.absolute();
    CHECK(phase_time(p, e).tau == doctest::Approx(4.0 / v).epsilon(1e-8));
  }
  SUBCASE("Si-SiO2 barrier") {
    const auto r = phase_time(si_sio2(), 1.5);
    CHECK(r.converged);
    CHECK_FALSE(r.ill_conditioned);
    CHECK(r.relative_change < 1e-3);
    // Central differences of the closed-form phase at two step sizes.
    const RectangularBarrier b{3.1, 1.0, EffectiveMass(0.07)};
    for (double h : {1e-4, 5e-5}) {
      const double fd = hbar * (exit_phase(1.5 + h, b) - exit_phase(1.5 - h, b)) / (2.0 * h);
      CHECK(r.tau == doctest::Approx(fd).epsilon(1e-6));
    }
    // order of 1e-15 s
    CHECK(r.tau > 0.1);
    CHECK(r.tau < 10.0);
    const auto half = phase_time(si_sio2(), 1.5, 0.5 * r.de);
    CHECK(std::abs(half.tau - r.tau) < 1e-3 * std::abs(r.tau));
  }
  SUBCASE("stencil straddling the barrier top") {
    const auto p = si_sio2();
    const double at = phase_time(p, 3.1).tau;
    CHECK(std::isfinite(at));
    CHECK(at == doctest::Approx(phase_time(p, 3.1 * (1 + 1e-6)).tau).epsilon(1e-4));
    CHECK(at == doctest::Approx(phase_time(p, 3.1 * (1 - 1e-6)).tau).epsilon(1e-4));
  }
  SUBCASE("vanishing transmission is flagged") {
    const auto r = phase_time(PotentialProfile::barrier(3.1, 200.0, EffectiveMass(1.0)), 1.5);
    CHECK(r.ill_conditioned);
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(phase_time(si_sio2(), 0.0), ValidationError);
    CHECK_THROWS_AS(phase_time(si_sio2(), NAN), ValidationError);
    CHECK_THROWS_AS(phase_time(si_sio2(), 1.0, NAN), ValidationError);
  }
}

TEST_CASE("property: phase time is positive and step-stable below the barrier") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::uniform_real_distribution<double> w(0.2, 3.0);
  std::uniform_real_distribution<double> m(0.05, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double v0 = 0.5 + 4.0 * u(rng);
    const auto p = PotentialProfile::barrier(v0, w(rng), EffectiveMass(m(rng)));
    const double e = u(rng) * v0;
    const auto r = phase_time(p, e);
    CHECK(r.converged);
    CHECK(r.tau > 0.0);
    const auto half = phase_time(p, e, 0.5 * r.de);
    CHECK(std::abs(half.tau - r.tau) < 1e-3 * r.tau);
  }
}

TEST_CASE("dwell_time") {
  SUBCASE("empty profile") { CHECK(dwell_time(PotentialProfile::free(), 1.0) == 0.0); }
  SUBCASE("Si-SiO2 barrier") {
    const double t = dwell_time(si_sio2(), 1.5);
    CHECK(t > 0.0);
    CHECK(t < 10.0);  // 1e-15 s or below
    CHECK(t == doctest::Approx(dwell_closed_form(1.5, 3.1, 1.0, 0.07)).epsilon(1e-10));
  }
  SUBCASE("closed form equals quadrature of the Numerov density") {
    for (double e : {0.7, 1.5, 3.1, 4.5}) {
      CAPTURE(e);
      const auto num = oracle::numerov_barrier(3.1, 1.0, 0.07, e, 200000);
      std::vector<double> rho;
      for (const auto& v : num.psi) rho.push_back(std::norm(v));
      const double k = wavevector(e, EffectiveMass(0.07));
      const double quad = simpson(num.x, rho) / (hbar * k / EffectiveMass(0.07).absolute());
      CHECK(dwell_time(si_sio2(), e) == doctest::Approx(quad).epsilon(1e-6));
    }
  }
  SUBCASE("multi-segment profile") {
    PotentialProfile p;
    p.mass = EffectiveMass(0.2);
    p.segments = {{0.5, 1.0}, {1.5, 0.2}, {0.5, 1.0}};
    const double e = 0.6;
    const auto num = oracle::numerov_scatter({{0.5, 1.0}, {1.5, 0.2}, {0.5, 1.0}}, 0.0, 0.2, e, 1e-5);
    std::vector<double> rho;
    for (const auto& v : num.psi) rho.push_back(std::norm(v));
    const double quad = simpson(num.x, rho) / (hbar * wavevector(e, p.mass) / p.mass.absolute());
    CHECK(dwell_time(p, e) == doctest::Approx(quad).epsilon(1e-6));
  }
  SUBCASE("opaque barrier stays finite") {
    const double t = dwell_time(PotentialProfile::barrier(3.1, 100.0, EffectiveMass(1.0)), 1.5);
    CHECK(std::isfinite(t));
    // The dwell time saturates with width; the closed form overflows at
    // d = 100 nm, so compare against it at 30 nm.
    CHECK(t == doctest::Approx(dwell_closed_form(1.5, 3.1, 30.0, 1.0)).epsilon(1e-6));
  }
}

TEST_CASE("packet_transit") {
  SUBCASE("free flight over a flat region") {
    const EffectiveMass mass(1.0);
    PotentialProfile p;
    p.mass = mass;
    p.segments = {{10.0, 0.0}};
    const WavePacketSpec spec{-15.0, 1.0, 1.0, mass};
    const auto run = compare_models(spec, p, suggest_run_settings(spec, p));
    const auto r = packet_transit(run);
    REQUIRE(r.reliable);
    CHECK(r.value == doctest::Approx(10.0 / run.group_velocity).epsilon(0.02));
  }
  SUBCASE("opaque barrier is unreliable") {
    const EffectiveMass mass(1.0);
    const auto p = PotentialProfile::barrier(3.1, 3.0, mass);
    const WavePacketSpec spec{-15.0, 1.0, 1.0, mass};
    const auto run = compare_models(spec, p, suggest_run_settings(spec, p));
    const auto r = packet_transit(run);
    CHECK_FALSE(r.reliable);
    CHECK_FALSE(r.reason.empty());
  }
  SUBCASE("Si-SiO2 scale barrier") {
    const auto p = si_sio2();
    const WavePacketSpec spec{-15.0, 1.0, 1.5, p.mass};
    const auto run = compare_models(spec, p, suggest_run_settings(spec, p));
    const auto r = packet_transit(run);
    REQUIRE(r.reliable);
    const double ratio = std::abs(r.value) / phase_time(p, 1.5).tau;
    CHECK(ratio > 0.1);
    CHECK(ratio < 10.0);
  }
  SUBCASE("unsettled run is unreliable") {
    ModelComparison run;
    run.settled = false;
    CHECK_FALSE(packet_transit(run).reliable);
  }
}

TEST_CASE("compare_with_uncertainty") {
  const auto u = paper_estimate(1.0, EffectiveMass(0.07));
  SUBCASE("Si-SiO2 configuration is within one order of magnitude") {
    const auto report = time_report(si_sio2(), 1.5, u);
    const auto r = compare_with_uncertainty(report, u);
    CHECK(r.applicable);
    CHECK(r.within_order);
    CHECK(r.warnings.empty());
    CHECK(report.uncertainty_time == u.delta_t);
    for (double v : {*r.phase_over_dt, *r.dwell_over_dt, *r.phase_over_dwell}) {
      CHECK(v >= 0.1);
      CHECK(v <= 10.0);
    }
    CHECK_FALSE(r.transit_over_dt.has_value());
  }
  SUBCASE("with a packet run the transit ratio is reported separately") {
    const auto p = si_sio2();
    const WavePacketSpec spec{-15.0, 1.0, 1.5, p.mass};
    const auto run = compare_models(spec, p, suggest_run_settings(spec, p));
    const auto report = time_report(p, 1.5, u, &run);
    REQUIRE(report.packet_transit.has_value());
    const auto r = compare_with_uncertainty(report, u);
    CHECK(r.transit_over_dt.has_value());
    CHECK(r.transit_within_order.has_value());
    CHECK(r.within_order);
  }
  SUBCASE("free profile is not applicable") {
    const auto report = time_report(PotentialProfile::free(EffectiveMass(0.07)), 1.5, u);
    const auto r = compare_with_uncertainty(report, u);
    CHECK_FALSE(r.applicable);
    CHECK_FALSE(r.phase_over_dt.has_value());
  }
  SUBCASE("mass mismatch is warned about") {
    const auto report = time_report(PotentialProfile::barrier(3.1, 1.0, EffectiveMass(1.0)), 1.5, u);
    CHECK_FALSE(compare_with_uncertainty(report, u).warnings.empty());
  }
}
