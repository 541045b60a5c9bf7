#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "geoscat/census.hpp"
#include "geoscat/deflection.hpp"
#include "geoscat/metric_forge.hpp"
#include "geoscat/profile.hpp"

using namespace geoscat;

namespace {

struct Forged {
  ProfileFunction f;
  DeflectionSpec spec;
  MetricGrid grid;
  MetricField field;

  Forged(double eps, int n_r, int n_th)
      : spec(eps), grid(forge_metric(spec, f, n_r, n_th).grid), field(grid) {}
};

// shared fixtures, built once (forging dominates the suite runtime)
const Forged& flat_grid() {
  static Forged g(0.0, 65, 256);
  return g;
}
const Forged& bent_grid() {
  static Forged g(0.05, 129, 512);
  return g;
}

GeodesicState launch(double r, double theta, double v_r, double v_th) {
  GeodesicState s;
  s.pos = PolarPoint::make(r, theta);
  s.v_r = v_r;
  s.v_theta = v_th;
  return s;
}

} // namespace

TEST_CASE("gauss_bonnet_disk: rotationally symmetric closed forms") {
  ProfileFunction f;
  for (double R : {1.0, kR1, 5.0, 10.0})
    CHECK(gauss_bonnet_disk(nullptr, f, R) ==
          doctest::Approx(kTwoPi).epsilon(1e-12));
  CHECK_THROWS_AS(gauss_bonnet_disk(nullptr, f, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gauss_bonnet_disk(nullptr, f, 1.0, 4),
                  std::invalid_argument);
}

TEST_CASE("gauss_bonnet_disk: unperturbed grid across the band") {
  const auto& g = flat_grid();
  for (double R : {kR1, 5.0}) {
    const double tot = gauss_bonnet_disk(&g.field, g.f, R);
    CHECK(std::fabs(tot - kTwoPi) < 1e-4);
  }
  // boundary inside the band exercises the numeric turning integral
  const double mid = gauss_bonnet_disk(&g.field, g.f, 1.9);
  CHECK(std::fabs(mid - kTwoPi) < 1e-4);
}

TEST_CASE("gauss_bonnet_disk: perturbed grid") {
  const auto& g = bent_grid();
  for (double R : {kR1, 5.0, 10.0}) {
    const double tot = gauss_bonnet_disk(&g.field, g.f, R);
    CHECK(std::fabs(tot - kTwoPi) < 1e-4);
  }
}

TEST_CASE("scatter_experiment: unperturbed grid reproduces the radial law") {
  const auto& g = flat_grid();
  const auto recs = scatter_experiment(&g.field, g.f, g.spec, 16);
  REQUIRE(recs.size() == 16);
  for (const auto& r : recs) {
    REQUIRE(r.ok);
    CHECK(r.azimuth_error < 1e-7);
    CHECK(std::fabs(r.angle_deviation) < 1e-7);
    CHECK(r.measured_length == doctest::Approx(0.25 * kPi).epsilon(1e-7));
  }
}

TEST_CASE("scatter_experiment: perturbed grid follows the deflection law") {
  const auto& g = bent_grid();
  const int n = 48;
  const auto recs = scatter_experiment(&g.field, g.f, g.spec, n);
  double worst_az = 0.0, worst_ang = 0.0;
  double dev_max = 0.0;
  for (const auto& r : recs) {
    REQUIRE(r.ok);
    worst_az = std::max(worst_az, r.azimuth_error);
    worst_ang = std::max(worst_ang, std::fabs(r.angle_deviation));
    dev_max = std::max(dev_max,
                       std::fabs(g.spec.phi_eps(r.theta_in)));
  }
  CHECK(dev_max > 1e-3);       // the perturbation actually bends arrivals
  CHECK(worst_az < 5e-4);      // coarse grid; the acceptance run tightens
  CHECK(worst_ang < 5e-4);

  // measured length vs prescribed leaf length: constant offset
  double c0 = recs[0].measured_length - g.spec.leaf_length(recs[0].theta_in);
  for (const auto& r : recs) {
    const double c = r.measured_length - g.spec.leaf_length(r.theta_in);
    CHECK(std::fabs(c - c0) < 5e-4);
  }

  // finite-difference derivative of the measured length vs -sin(phi_eps)
  for (int j = 1; j + 1 < n; ++j) {
    const double dL = (recs[j + 1].measured_length -
                       recs[j - 1].measured_length) /
                      (2.0 * kTwoPi / n);
    CHECK(std::fabs(dL + std::sin(g.spec.phi_eps(recs[j].theta_in))) < 2e-3);
  }
}

TEST_CASE("radial_return: unperturbed passes straight through") {
  const auto& g = flat_grid();
  const auto rec = radial_return(&g.field, g.f, g.spec, 0.7);
  REQUIRE(rec.ok);
  CHECK(std::fabs(angle_diff(rec.theta_plus, 0.7 + kPi)) < 1e-7);
  CHECK(rec.deviation < 1e-7);
}

TEST_CASE("radial_return: perturbed launch is deflected") {
  const auto& g = bent_grid();
  const auto rec = radial_return(&g.field, g.f, g.spec, 0.25 * kPi);
  REQUIRE(rec.ok);
  CHECK(rec.deviation > 1e-3);
  // case with an unperturbed inward pass: deflection happens on the way out
  const auto rec2 = radial_return(&g.field, g.f, g.spec, 1.25 * kPi);
  REQUIRE(rec2.ok);
  CHECK(rec2.deviation > 1e-3);
  CHECK(std::fabs(angle_diff(rec2.theta_plus, 0.25 * kPi)) < 0.05);
  // marked azimuths exit radially
  for (double th : {0.0, 0.5 * kPi, kPi, 1.5 * kPi}) {
    const auto m = radial_return(&g.field, g.f, g.spec, th);
    REQUIRE(m.ok);
    CHECK(m.deviation < 1e-6);
    CHECK(std::fabs(angle_diff(m.theta_plus, th + kPi)) < 1e-5);
  }
}

TEST_CASE("self_intersection: radial line has none, circle closes up") {
  ProfileFunction f;
  auto line = trace(nullptr, f, launch(6.0, 0.3, -1.0, 0.0), 14.0);
  CHECK(!self_intersection(line).has_value());

  auto circle = trace(nullptr, f, launch(kR0, 0.0, 0.0, 1.0), 3.0 * kPi);
  const auto ev = self_intersection(circle);
  REQUIRE(ev.has_value());
  CHECK(ev->s2 - ev->s1 == doctest::Approx(kTwoPi).epsilon(1e-3));
  CHECK(std::hypot(ev->x, ev->y) == doctest::Approx(kR0).epsilon(1e-3));
}

TEST_CASE("self_intersection: deflected candidate crosses itself") {
  const auto& g = bent_grid();
  TraceOptions opts;
  auto tr = trace(&g.field, g.f,
                  launch(opts.escape_radius, 0.25 * kPi, -1.0, 0.0),
                  6.0 * kPi + 2.0 * opts.escape_radius, opts);
  const auto ev = self_intersection(tr);
  REQUIRE(ev.has_value());
  CHECK(ev->s2 > ev->s1 + 0.5);
}

TEST_CASE("injective_census: unperturbed metric degenerates to all-radial") {
  const auto& g = flat_grid();
  const auto rep = injective_census(&g.field, g.f, g.spec, 8);
  CHECK(rep.ok);
  CHECK(rep.degenerate);
  CHECK(rep.marked.size() == 8);
  CHECK(rep.count == 4);
}

TEST_CASE("injective_census: perturbed metric keeps exactly two lines") {
  const auto& g = bent_grid();
  const auto rep = injective_census(&g.field, g.f, g.spec, 8);
  CHECK(rep.ok);
  CHECK(!rep.degenerate);
  REQUIRE(rep.marked.size() == 4);
  CHECK(std::fabs(rep.marked[0] - 0.0) < 1e-9);
  CHECK(std::fabs(rep.marked[1] - 0.5 * kPi) < 1e-9);
  CHECK(std::fabs(rep.marked[2] - kPi) < 1e-9);
  CHECK(std::fabs(rep.marked[3] - 1.5 * kPi) < 1e-9);
  CHECK(rep.count == 2);
  for (const auto& e : rep.entries)
    if (!e.radial) CHECK(e.intersects);
}

TEST_CASE("injective_census rejects grids missing the special azimuths") {
  const auto& g = flat_grid();
  CHECK_THROWS_AS(injective_census(&g.field, g.f, g.spec, 6),
                  std::invalid_argument);
}

TEST_CASE("deviation scales linearly in the perturbation size") {
  ProfileFunction f;
  DeflectionSpec half(0.025);
  auto forged = forge_metric(half, f, 129, 512);
  MetricField field(forged.grid);
  const double th = 1.25 * kPi; // generic azimuth, unperturbed inward pass
  const auto big = radial_return(&bent_grid().field, bent_grid().f,
                                 bent_grid().spec, th);
  const auto small = radial_return(&field, f, half, th);
  REQUIRE(big.ok);
  REQUIRE(small.ok);
  const double ratio = small.deviation / big.deviation;
  CHECK(ratio > 0.45);
  CHECK(ratio < 0.55);
}
