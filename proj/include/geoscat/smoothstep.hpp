#pragma once

#include <cmath>

namespace geoscat {

// Exponential bump building blocks. E(x) = exp(-1/x) for x > 0 extends to a
// C^inf function that is flat (all derivatives zero) at x = 0, which is what
// the gluing constructions need: blends that match to all orders at the
// seams.

struct Deriv2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

namespace detail {

// exp(-1/x) with first and second derivatives; zero branch for x <= cutoff.
inline Deriv2 flat_exp(double x) {
  Deriv2 out;
  if (x <= 1.4e-3) return out; // exp(-1/x) < 1e-310, flush to the flat branch
  const double e = std::exp(-1.0 / x);
  const double ix = 1.0 / x;
  out.v = e;
  out.d1 = e * ix * ix;                       // E' = E / x^2
  out.d2 = e * (ix * ix * ix * ix - 2.0 * ix * ix * ix);
  return out;
}

} // namespace detail

/// Smoothstep beta: 0 for u <= 0, 1 for u >= 1, strictly increasing on
/// (0, 1), flat to all orders at both ends. beta(u) = E(u) / (E(u) + E(1-u)).
inline Deriv2 smoothstep(double u) {
  Deriv2 out;
  if (u <= 1.4e-3) return out;
  if (u >= 1.0 - 1.4e-3) {
    out.v = 1.0;
    return out;
  }
  const Deriv2 a = detail::flat_exp(u);
  Deriv2 b = detail::flat_exp(1.0 - u);
  b.d1 = -b.d1; // chain rule for E(1-u)
  const double s = a.v + b.v;
  const double sp = a.d1 + b.d1;
  const double spp = a.d2 + b.d2;
  out.v = a.v / s;
  out.d1 = (a.d1 * s - a.v * sp) / (s * s);
  out.d2 = (a.d2 * s - a.v * spp) / (s * s) - 2.0 * sp * out.d1 / s;
  return out;
}

/// Interior bump: 0 outside (0,1), flat at both endpoints, normalized to
/// peak value 1 at xi = 1/2. Used to deposit leftover leaf length strictly
/// inside the free middle band.
inline Deriv2 interior_bump(double xi) {
  Deriv2 out;
  if (xi <= 1.4e-3 || xi >= 1.0 - 1.4e-3) return out;
  const Deriv2 a = detail::flat_exp(xi);
  Deriv2 b = detail::flat_exp(1.0 - xi);
  b.d1 = -b.d1;
  const double norm = std::exp(4.0); // 1 / (E(1/2)^2)
  out.v = norm * a.v * b.v;
  out.d1 = norm * (a.d1 * b.v + a.v * b.d1);
  out.d2 = norm * (a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2);
  return out;
}

/// Plateau bump: smoothstep ramps of width `ramp` at both ends of (0, 1)
/// around a flat top at 1. Compactly supported in (0, 1), flat to all
/// orders at the seams, mean value 1 - ramp. Used where a deposit of mass
/// should stay far from peak concentration.
inline Deriv2 plateau_bump(double xi, double ramp = 0.3) {
  if (xi <= 0.0 || xi >= 1.0) return {};
  const Deriv2 a = smoothstep(xi / ramp);
  Deriv2 b = smoothstep((1.0 - xi) / ramp);
  b.d1 = -b.d1; // chain rule, inner derivative -1
  Deriv2 out;
  out.v = a.v * b.v;
  out.d1 = (a.d1 * b.v + a.v * b.d1) / ramp;
  out.d2 = (a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2) / (ramp * ramp);
  return out;
}

} // namespace geoscat
