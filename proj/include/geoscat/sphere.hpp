#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "geoscat/constants.hpp"
#include "geoscat/deflection.hpp"
#include "geoscat/polar.hpp"

namespace geoscat {

// Exact geodesics of the round region r < 3*pi/4 via the isometry with the
// unit sphere: (r, theta) -> (sin r cos theta, sin r sin theta, cos r).
// Great circles X(s) = cos(s) X0 + sin(s) T0 give machine-precision
// propagation with no pole-chart singularity.

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator*(double c, Vec3 a) { return {c * a.x, c * a.y, c * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 embed_point(double r, double theta) {
  return {std::sin(r) * std::cos(theta), std::sin(r) * std::sin(theta),
          std::cos(r)};
}

/// Unit 3-space velocity of the tangent vector (v_r, v_theta) at (r, theta).
inline Vec3 embed_velocity(double r, double theta, double v_r, double v_th) {
  const Vec3 er = {std::cos(r) * std::cos(theta),
                   std::cos(r) * std::sin(theta), -std::sin(r)};
  const Vec3 eth = {-std::sin(theta), std::cos(theta), 0.0}; // unit azimuthal
  return v_r * er + (std::sin(r) * v_th) * eth;
}

/// Polar state (position + velocity components) of a unit tangent (X, T) on
/// the sphere; requires sin r > 0 (away from poles).
inline void sphere_to_polar(Vec3 X, Vec3 T, PolarPoint& p, double& v_r,
                            double& v_th) {
  const double z = std::max(-1.0, std::min(1.0, X.z));
  const double r = std::acos(z);
  const double theta = std::atan2(X.y, X.x);
  const Vec3 er = {std::cos(r) * std::cos(theta),
                   std::cos(r) * std::sin(theta), -std::sin(r)};
  const Vec3 eth = {-std::sin(theta), std::cos(theta), 0.0};
  p = PolarPoint::make(r, theta);
  v_r = dot(T, er);
  v_th = dot(T, eth) / std::sin(r);
}

/// Great-circle state at arclength s from initial (X0, T0).
inline void great_circle_state(Vec3 X0, Vec3 T0, double s, Vec3& X, Vec3& T) {
  X = std::cos(s) * X0 + std::sin(s) * T0;
  T = (-std::sin(s)) * X0 + std::cos(s) * T0;
}

// ---------------------------------------------------------------------------
// Closed-form azimuth advance of a band launch.
//
// Launch at (R0, theta0) with direction cos(phi) d_r + sin(phi) d_theta
// (unit, since f(R0) = 1). Then along the great circle
//   cos r(s) = -sin(s) cos(phi),
//   theta(s) = theta0 + atan2(sin(s) sin(phi), cos(s)).
// Writing u = -cos r in [0, 1), the advance at radius r is
//   D(r, phi) = atan2(u tan(phi), sqrt(cos^2 phi - u^2))           (u >= 0)
// with partials (I = sin phi, f = sin r):
//   dD/dr        = I / (f sqrt(f^2 - I^2))
//   dD/dphi      = u / (cos^2 phi sqrt(1 - u^2 / cos^2 phi))
//   d2D/dr dphi  = f cos(phi) / (f^2 - I^2)^{3/2}
// ---------------------------------------------------------------------------

/// Arclength from the launch at r = R0 to radius r in [R0, R1].
inline double band_arclength_at_radius(double r, double phi) {
  const double u = -std::cos(r);
  return std::asin(u / std::cos(phi));
}

/// Arclength of the launch until it hits r = R1.
inline double band_exit_length(double phi) {
  return band_arclength_at_radius(kR1, phi);
}

inline double azimuth_advance(double r, double phi) {
  if (r <= kR0) return 0.0;
  const double u = -std::cos(r);
  const double c = std::cos(phi);
  const double ss = u / c;
  const double cs = std::sqrt(std::max(0.0, 1.0 - ss * ss));
  return std::atan2(ss * std::sin(phi), cs);
}

inline double azimuth_advance_dr(double r, double phi) {
  const double I = std::sin(phi), f = std::sin(r);
  return I / (f * std::sqrt(f * f - I * I));
}

inline double azimuth_advance_dphi(double r, double phi) {
  if (r <= kR0) return 0.0;
  const double u = -std::cos(r);
  const double c = std::cos(phi);
  return u / (c * c * std::sqrt(std::max(1e-300, 1.0 - u * u / (c * c))));
}

inline double azimuth_advance_drdphi(double r, double phi) {
  const double I = std::sin(phi), f = std::sin(r);
  const double d = f * f - I * I;
  return f * std::cos(phi) / (d * std::sqrt(d));
}

// ---------------------------------------------------------------------------

/// Exact great-circle arc in the round region, with sampled states.
struct GreatCircleArc {
  PolarPoint start;
  TangentVector start_dir;
  double length = 0.0;
  double theta0 = 0.0;  // launch azimuth
  double phi = 0.0;     // launch angle to d_r
  double clairaut = 0.0; // I = f(r0) sin(phi); equals sin(phi) at r0 = R0
  Vec3 X0, T0;          // 3-space initial data for exact re-evaluation

  struct Sample {
    double s = 0.0;
    PolarPoint p;
    double v_r = 0.0;
    double v_theta = 0.0;
  };
  std::vector<Sample> samples;

  Sample state_at(double s) const {
    Vec3 X, T;
    great_circle_state(X0, T0, s, X, T);
    Sample out;
    out.s = s;
    sphere_to_polar(X, T, out.p, out.v_r, out.v_theta);
    return out;
  }

  /// Exact azimuth (lift, continuous in r) of the arc at radius r.
  double azimuth_at_radius(double r) const {
    return theta0 + azimuth_advance(r, phi);
  }
};

/// Half-great-circle transit of the cap r <= R0: enter on the circle r = R0
/// strictly inward, exit at the antipodal azimuth after arclength exactly pi.
struct CapTransit {
  PolarPoint exit;
  double exit_v_r = 0.0;
  double exit_v_theta = 0.0;
  double length = kPi;
  Vec3 X0, T0; // for interior sampling by the tracer
};

inline CapTransit cap_transit(const PolarPoint& entry, double v_r, double v_th,
                              double tangential_tol = 1e-12) {
  if (std::fabs(entry.r - kR0) > 1e-9)
    throw std::invalid_argument("cap_transit: entry not on r = R0");
  if (!(v_r < -tangential_tol))
    throw std::invalid_argument("cap_transit: direction not strictly inward");
  CapTransit t;
  t.X0 = embed_point(entry.r, entry.theta);
  t.T0 = embed_velocity(entry.r, entry.theta, v_r, v_th);
  Vec3 X, T;
  great_circle_state(t.X0, t.T0, kPi, X, T);
  sphere_to_polar(X, T, t.exit, t.exit_v_r, t.exit_v_theta);
  return t;
}

/// Shoot the unperturbed geodesic from (R0, theta) with direction
/// cos(phi_eps) d_r + sin(phi_eps) d_theta until it reaches r = R1.
inline GreatCircleArc band_shoot(const DeflectionSpec& spec, double theta,
                                 int n_samples = 33) {
  const double phi = spec.phi_eps(theta);
  if (!(std::fabs(phi) < kPi / 4.0))
    throw std::runtime_error("band_shoot: |phi_eps| >= pi/4");
  GreatCircleArc arc;
  arc.theta0 = theta;
  arc.phi = phi;
  arc.clairaut = std::sin(phi);
  arc.start = PolarPoint::make(kR0, theta);
  arc.start_dir = {arc.start, std::cos(phi), std::sin(phi)};
  arc.X0 = embed_point(kR0, theta);
  arc.T0 = embed_velocity(kR0, theta, std::cos(phi), std::sin(phi));
  arc.length = band_exit_length(phi);
  if (!(arc.length > 0.0) || !std::isfinite(arc.length))
    throw std::runtime_error("band_shoot: arc does not reach r = R1");
  arc.samples.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i)
    arc.samples.push_back(arc.state_at(arc.length * i / (n_samples - 1)));
  return arc;
}

/// True iff the band launches foliate the band: positive radial speed along
/// each arc and strictly monotone azimuth maps on every sampled circle.
inline bool transversality_check(const DeflectionSpec& spec, int n_theta,
                                 int n_radii = 64) {
  const double mono_tol = 1e-10;
  std::vector<double> phis(n_theta);
  for (int j = 0; j < n_theta; ++j) {
    const double th = kTwoPi * j / n_theta;
    phis[j] = spec.phi_eps(th);
    if (!(std::cos(phis[j]) > std::sqrt(0.5))) return false; // never exits
  }
  for (int i = 0; i <= n_radii; ++i) {
    const double r = kR0 + kBandWidth * i / n_radii;
    double prev = 0.0;
    for (int j = 0; j <= n_theta; ++j) {
      const int jj = j % n_theta;
      const double az =
          kTwoPi * j / n_theta + azimuth_advance(r, phis[jj]);
      if (j > 0 && !(az - prev > mono_tol)) return false;
      prev = az;
    }
    // positive radial speed: dr/ds = cos(s) cos(phi) / sin(r) > 0 while
    // s < pi/2; exit length < pi/2 is implied by |phi| < pi/4, checked above.
  }
  return true;
}

} // namespace geoscat
