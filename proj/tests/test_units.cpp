#include <cmath>
#include <random>

#include "doctest.h"
#include "tunnel/errors.hpp"
#include "tunnel/units.hpp"

using namespace tunnel;

// Expected values below were evaluated at 40 digits from the CODATA-2018
// defining constants (h, e exact; m_e = 9.1093837015e-31 kg).

TEST_CASE("constants match CODATA-derived values") {
  const auto k = constants();
  CHECK(k.hbar == doctest::Approx(0.6582119569509066).epsilon(1e-14));
  CHECK(k.hbar2_over_2me == doctest::Approx(0.03809982116154860).epsilon(1e-14));
  CHECK(k.ev_fs_per_nm_to_si_momentum == doctest::Approx(1.602176634e-25).epsilon(1e-15));
  CHECK(k.electron_mass_si == 9.1093837015e-31);
  CHECK(k.hbar > 0.0);
  CHECK(k.hbar2_over_2me > 0.0);
}

TEST_CASE("hbar^2 / (2 hbar2_over_2me) is the free-electron mass") {
  const auto k = constants();
  const double me = k.hbar * k.hbar / (2.0 * k.hbar2_over_2me);  // eV*fs^2/nm^2
  CHECK(me == doctest::Approx(5.685630103565722).epsilon(1e-11));
  // 1 eV*fs^2/nm^2 = 1.602176634e-31 kg
  CHECK(me * 1.602176634e-31 == doctest::Approx(k.electron_mass_si).epsilon(1e-9));
  CHECK(EffectiveMass(1.0).absolute() == doctest::Approx(me).epsilon(1e-14));
}

TEST_CASE("make_grid") {
  SUBCASE("unit interval") {
    const auto g = make_grid(0.0, 1.0, 11);
    CHECK(g.dx() == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(g.x(10) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("wide grid") {
    const auto g = make_grid(-50.0, 50.0, 8192);
    CHECK(g.dx() == doctest::Approx(100.0 / 8191.0).epsilon(1e-15));
    CHECK(g.dx() == doctest::Approx(0.0122).epsilon(1e-3));
  }
  SUBCASE("rejections") {
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 11), ValidationError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 7), ValidationError);
    CHECK_THROWS_AS(make_grid(0.0, NAN, 11), ValidationError);
    CHECK_THROWS_AS(make_grid(-INFINITY, 0.0, 11), ValidationError);
  }
}

TEST_CASE("effective mass must be positive") {
  CHECK_THROWS_AS(EffectiveMass(0.0), ValidationError);
  CHECK_THROWS_AS(EffectiveMass(-0.1), ValidationError);
  CHECK(EffectiveMass(0.07).ratio == 0.07);
}

TEST_CASE("momentum_to_si") {
  CHECK(momentum_to_si(0.0) == 0.0);
  CHECK(momentum_to_si(1.0) == doctest::Approx(1.602176634e-25).epsilon(1e-15));
  // hbar / (1 nm): the 1.054e-25 kg m/s figure
  const double p = momentum_to_si(codata::hbar);
  CHECK(p == doctest::Approx(1.054571817646156e-25).epsilon(1e-13));
  CHECK(std::abs(p / 1.054e-25 - 1.0) < 5e-3);
}

TEST_CASE("momentum conversion round-trips") {
  std::mt19937_64 rng(20261015);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = std::exp(mag(rng)) * (i % 2 ? -1.0 : 1.0);
    CHECK(momentum_from_si(momentum_to_si(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}
