#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "geoscat/constants.hpp"
#include "geoscat/profile.hpp"
#include "geoscat/quadrature.hpp"

using namespace geoscat;

TEST_CASE("profile is exactly trigonometric in the working region") {
  ProfileFunction f;
  for (int i = 1; i <= 300; ++i) {
    const double r = kR1 * i / 300.0;
    CHECK(std::fabs(f.eval(r, 0) - std::sin(r)) < 1e-14);
    CHECK(std::fabs(f.eval(r, 1) - std::cos(r)) < 1e-14);
    CHECK(std::fabs(f.eval(r, 2) + std::sin(r)) < 1e-14);
  }
  CHECK(f.eval(kR0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.eval(kPi / 4.0, 0) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
}

TEST_CASE("profile decays monotonically past pi/2") {
  ProfileFunction f;
  for (int i = 0; i <= 2000; ++i) {
    const double r = kR0 + 1e-3 + (20.0 - kR0) * i / 2000.0;
    CHECK(f.eval(r, 1) < 0.0);
    CHECK(f.eval(r, 0) > 0.0);
  }
  CHECK(f.eval(40.0, 0) < 1e-12);
}

TEST_CASE("profile derivatives are finite-difference consistent across the blend") {
  ProfileFunction f;
  const double h = 1e-5;
  for (double r : {kR1 - 0.1, kR1 - h, kR1 + h, 2.6, 2.9, kPi - h, kPi + h,
                   3.5, 6.0}) {
    const double fd1 = (f.eval(r + h, 0) - f.eval(r - h, 0)) / (2 * h);
    const double fd2 =
        (f.eval(r + h, 0) - 2 * f.eval(r, 0) + f.eval(r - h, 0)) / (h * h);
    CHECK(f.eval(r, 1) == doctest::Approx(fd1).epsilon(1e-7));
    CHECK(f.eval(r, 2) == doctest::Approx(fd2).epsilon(1e-4));
  }
  // values continuous across both blend edges (offset itself costs ~2e-9 |f'|)
  CHECK(f.eval(kR1 - 1e-9, 0) == doctest::Approx(f.eval(kR1 + 1e-9, 0)).epsilon(1e-8));
  CHECK(f.eval(kPi - 1e-9, 0) == doctest::Approx(f.eval(kPi + 1e-9, 0)).epsilon(1e-8));
}

TEST_CASE("domain and parameter errors") {
  ProfileFunction f;
  CHECK_THROWS_AS(f.eval(0.0, 0), std::domain_error);
  CHECK_THROWS_AS(f.eval(-1.0, 0), std::domain_error);
  CHECK_THROWS_AS(f.gaussian_curvature(-2.0), std::domain_error);
  CHECK_THROWS_AS(ProfileFunction(kR1, kR1 - 0.1, 1.0), std::invalid_argument);
  // growing tail cannot satisfy the decay requirement
  CHECK_THROWS_AS(ProfileFunction(kR1, kPi, 1e-9), std::runtime_error);
}

TEST_CASE("gaussian curvature is 1 on the round region, tail matches FD") {
  ProfileFunction f;
  CHECK(f.gaussian_curvature(0.5) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.gaussian_curvature(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  const double r = 6.0, h = 1e-5;
  const double fd2 =
      (f.eval(r + h, 0) - 2 * f.eval(r, 0) + f.eval(r - h, 0)) / (h * h);
  CHECK(f.gaussian_curvature(r) ==
        doctest::Approx(-fd2 / f.eval(r, 0)).epsilon(1e-4));
}

TEST_CASE("christoffel symbols of the warped metric") {
  ProfileFunction f;
  auto c0 = f.christoffel(kR0);
  CHECK(std::fabs(c0.r_thth) < 1e-15);
  auto c1 = f.christoffel(kPi / 4.0);
  CHECK(c1.r_thth == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(c1.th_rth == doctest::Approx(1.0).epsilon(1e-14)); // cot(pi/4)
  CHECK(c1.r_rr == 0.0);
  CHECK(c1.th_thth == 0.0);
  // at r = 5: Gamma^r_thth = -1/2 d/dr (f^2) via finite differences
  const double r = 5.0, h = 1e-6;
  auto sq = [&](double x) { const double v = f.eval(x, 0); return v * v; };
  const double fd = -(sq(r + h) - sq(r - h)) / (4 * h);
  CHECK(f.christoffel(r).r_thth == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("clairaut integral values and guards") {
  ProfileFunction f;
  // radial unit vector at any r
  CHECK(clairaut(f, {{1.3, 0.2}, 1.0, 0.0}) == doctest::Approx(0.0));
  // tangent to the circle r = R0 (f = 1): v_theta = 1 is unit
  CHECK(clairaut(f, {{kR0, 0.0}, 0.0, 1.0}) == doctest::Approx(1.0));
  CHECK(clairaut(f, {{kR0, 0.0}, 0.0, -1.0}) == doctest::Approx(-1.0));
  // angle pi/4 to d_r at r = pi/2
  const double c = std::sqrt(2.0) / 2.0;
  CHECK(clairaut(f, {{kR0, 1.0}, c, c}) == doctest::Approx(c).epsilon(1e-14));
  CHECK_THROWS_AS(clairaut(f, {{1.0, 0.0}, 2.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(clairaut(f, {{0.0, 0.0}, 1.0, 0.0}), std::domain_error);
}

TEST_CASE("clairaut is constant along a closed-form great circle") {
  ProfileFunction f;
  // great circle inclined at angle a to the equator of the unit sphere:
  // r(t), theta(t) from the embedding; Clairaut value must be constant.
  const double a = 0.4;
  double first = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double t = kTwoPi * i / 200.0;
    const double x = std::cos(t), y = std::sin(t) * std::cos(a),
                 z = std::sin(t) * std::sin(a);
    const double r = std::acos(z);
    if (r >= kR1 - 0.02) continue; // stay in the exactly round region
    const double theta = std::atan2(y, x);
    // velocity in 3-space
    const double dx = -std::sin(t), dy = std::cos(t) * std::cos(a),
                 dz = std::cos(t) * std::sin(a);
    const double v_r = -dz / std::sin(r);
    const double dtheta = (x * dy - y * dx) / (x * x + y * y);
    const double I = clairaut(f, {{r, theta}, v_r, dtheta}, 1e-9);
    if (first == 0.0) first = I;
    CHECK(I == doctest::Approx(first).epsilon(1e-12));
  }
}

TEST_CASE("gauss-bonnet on round caps") {
  ProfileFunction f;
  for (double R : {0.7, 1.0, 2.0}) {
    // area integral of K over the cap r <= R
    const double area_K =
        kTwoPi * integrate([&](double r) {
          return f.gaussian_curvature(r) * f.eval(r, 0);
        }, 1e-12, R);
    // boundary term: total geodesic curvature of the circle r = R is
    // 2 pi f'(R)
    const double boundary = kTwoPi * f.eval(R, 1);
    CHECK(area_K == doctest::Approx(kTwoPi * (1.0 - std::cos(R))).epsilon(1e-10));
    CHECK(area_K + boundary == doctest::Approx(kTwoPi).epsilon(1e-10));
  }
}
