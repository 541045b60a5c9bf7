#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "geoscat/constants.hpp"
#include "geoscat/profile.hpp"
#include "geoscat/quadrature.hpp"
#include "geoscat/sphere.hpp"

using namespace geoscat;

TEST_CASE("radial cap transit exits antipodally after arclength pi") {
  for (double th : {0.0, 0.7, 2.4, 4.4}) {
    auto t = cap_transit(PolarPoint::make(kR0, th), -1.0, 0.0);
    CHECK(t.length == kPi);
    CHECK(t.exit.r == doctest::Approx(kR0).epsilon(1e-13));
    CHECK(angle_diff(t.exit.theta, th + kPi) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(t.exit_v_r == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::fabs(t.exit_v_theta) < 1e-13);
  }
}

TEST_CASE("angled cap transit flips the radial component only") {
  // enter with -cos(a) d_r - sin(a) d_theta at theta; exit at theta + pi
  // with cos(a) d_r - sin(a) d_theta
  for (double a : {0.1, 0.4, 1.0}) {
    for (double th : {0.3, 2.0, 5.1}) {
      auto t = cap_transit(PolarPoint::make(kR0, th), -std::cos(a), -std::sin(a));
      CHECK(angle_diff(t.exit.theta, th + kPi) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(t.exit_v_r == doctest::Approx(std::cos(a)).epsilon(1e-13));
      CHECK(t.exit_v_theta == doctest::Approx(-std::sin(a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cap transit twice returns the reversed entry") {
  const double a = 0.6, th = 1.2;
  auto t1 = cap_transit(PolarPoint::make(kR0, th), -std::cos(a), -std::sin(a));
  // reverse the exit direction and transit again
  auto t2 = cap_transit(t1.exit, -t1.exit_v_r, -t1.exit_v_theta);
  CHECK(angle_diff(t2.exit.theta, th) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t2.exit_v_r == doctest::Approx(std::cos(a)).epsilon(1e-13));
  CHECK(t2.exit_v_theta == doctest::Approx(std::sin(a)).epsilon(1e-12));
}

TEST_CASE("cap transit guards") {
  CHECK_THROWS_AS(cap_transit(PolarPoint::make(kR0, 0.0), 0.0, 1.0),
                  std::invalid_argument); // tangential
  CHECK_THROWS_AS(cap_transit(PolarPoint::make(1.2, 0.0), -1.0, 0.0),
                  std::invalid_argument); // not on the circle
}

TEST_CASE("band shoot with zero deflection is radial of length pi/4") {
  DeflectionSpec zero(0.0);
  for (double th : {0.0, 1.0, 3.9}) {
    auto arc = band_shoot(zero, th);
    CHECK(arc.length == doctest::Approx(kPi / 4.0).epsilon(1e-14));
    for (const auto& s : arc.samples) {
      CHECK(angle_diff(s.p.theta, th) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(s.v_r == doctest::Approx(1.0).epsilon(1e-13));
    }
    CHECK(arc.samples.back().p.r == doctest::Approx(kR1).epsilon(1e-13));
  }
  // theta = 3pi/2 is radial even at nonzero epsilon
  DeflectionSpec spec(0.1);
  auto arc = band_shoot(spec, 3.0 * kR0);
  CHECK(arc.length == doctest::Approx(kPi / 4.0).epsilon(1e-14));
  CHECK(arc.phi == 0.0);
}

TEST_CASE("band arcs conserve clairaut and unit speed") {
  ProfileFunction f;
  DeflectionSpec spec(0.1);
  for (double th : {0.5, 1.1, 2.3, 2.9}) {
    auto arc = band_shoot(spec, th, 65);
    CHECK(arc.clairaut == doctest::Approx(std::sin(spec.phi_eps(th))).epsilon(1e-15));
    for (const auto& s : arc.samples) {
      if (s.p.r < 1e-6) continue;
      const double I = clairaut(f, {s.p, s.v_r, s.v_theta}, 1e-9);
      CHECK(I == doctest::Approx(arc.clairaut).epsilon(1e-12));
      const double fr = std::sin(s.p.r);
      CHECK(s.v_r * s.v_r + fr * fr * s.v_theta * s.v_theta ==
            doctest::Approx(1.0).epsilon(1e-13));
    }
    // radial coordinate strictly increasing along the arc
    for (size_t i = 1; i < arc.samples.size(); ++i)
      CHECK(arc.samples[i].p.r > arc.samples[i - 1].p.r);
  }
}

TEST_CASE("band endpoint azimuth matches the clairaut quadrature oracle") {
  DeflectionSpec spec(0.1);
  for (double th : {0.4, 0.83, 1.9, 2.6}) {
    auto arc = band_shoot(spec, th);
    const double I = std::sin(arc.phi);
    // independent oracle: dtheta/dr = I / (f sqrt(f^2 - I^2)), f = sin r
    const double adv = integrate(
        [&](double r) {
          const double fr = std::sin(r);
          return I / (fr * std::sqrt(fr * fr - I * I));
        },
        kR0, kR1, 1e-13);
    CHECK(azimuth_advance(kR1, arc.phi) == doctest::Approx(adv).epsilon(1e-11));
    const auto end = arc.state_at(arc.length);
    CHECK(end.p.r == doctest::Approx(kR1).epsilon(1e-12));
    CHECK(angle_diff(end.p.theta, th + adv) == doctest::Approx(0.0).epsilon(1e-10));
  }
}

TEST_CASE("band arclength matches the clairaut quadrature oracle") {
  const double phi = 0.09;
  const double I = std::sin(phi);
  const double len = integrate(
      [&](double r) {
        const double fr = std::sin(r);
        return fr / std::sqrt(fr * fr - I * I);
      },
      kR0, kR1, 1e-13);
  CHECK(band_exit_length(phi) == doctest::Approx(len).epsilon(1e-12));
}

TEST_CASE("azimuth advance derivatives match finite differences") {
  const double h = 1e-6;
  for (double r : {kR0 + 0.05, kR0 + 0.15, kR1 - 0.01}) {
    for (double phi : {-0.09, 0.0, 0.04, 0.1}) {
      const double fd_phi =
          (azimuth_advance(r, phi + h) - azimuth_advance(r, phi - h)) / (2 * h);
      CHECK(azimuth_advance_dphi(r, phi) == doctest::Approx(fd_phi).epsilon(1e-6));
      const double fd_r =
          (azimuth_advance(r + h, phi) - azimuth_advance(r - h, phi)) / (2 * h);
      if (phi != 0.0)
        CHECK(azimuth_advance_dr(r, phi) == doctest::Approx(fd_r).epsilon(1e-5));
      const double fd_rphi = (azimuth_advance_dr(r, phi + h) -
                              azimuth_advance_dr(r, phi - h)) /
                             (2 * h);
      CHECK(azimuth_advance_drdphi(r, phi) ==
            doctest::Approx(fd_rphi).epsilon(1e-5));
    }
  }
}

TEST_CASE("transversality holds in the working regime and fails beyond") {
  DeflectionSpec zero(0.0);
  CHECK(transversality_check(zero, 256));
  DeflectionSpec spec(0.1);
  CHECK(transversality_check(spec, 1024));
  DeflectionSpec wild(1.5); // max |phi_eps| = 1.5 rad, near pi/2
  CHECK_FALSE(transversality_check(wild, 256));
}
