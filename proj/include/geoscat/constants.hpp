#pragma once

#include <cmath>

namespace geoscat {

// Band radii: the metric is round-spherical on (0, kR1) and the
// perturbation lives in the annulus [kR0, kR1].
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kR0 = kPi / 2.0;        // inner band circle
inline constexpr double kR1 = 3.0 * kPi / 4.0;  // outer band circle
inline constexpr double kBandWidth = kR1 - kR0; // = pi/4

// Gluing band width used by the foliation interpolation and the leaf
// parameterization, one third of the band.
inline constexpr double kDefaultDelta = kBandWidth / 3.0; // = pi/12

/// Reduce an angle to [0, 2*pi).
inline double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

/// Signed angular difference a-b reduced to (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::fmod(a - b, kTwoPi);
  if (d <= -kPi) d += kTwoPi;
  if (d > kPi) d -= kTwoPi;
  return d;
}

} // namespace geoscat
