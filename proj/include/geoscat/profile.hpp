#pragma once

#include <cmath>
#include <stdexcept>

#include "geoscat/constants.hpp"
#include "geoscat/polar.hpp"
#include "geoscat/smoothstep.hpp"

namespace geoscat {

/// Warping function f of the rotationally symmetric metric
/// g = dr^2 + f(r)^2 dtheta^2.
///
/// f(r) = sin r exactly on (0, blend_start]; beyond blend_start it is
/// blended into the decaying tail sin(blend_start) * exp(-tail_rate *
/// (r - blend_start)) by a smoothstep that is flat to all orders at both
/// blend edges, so f is C^inf everywhere and exactly trigonometric in the
/// whole working region. With tail_rate = 1 the tail's slope at
/// blend_start happens to equal cos(blend_start) as well, keeping the
/// blend correction second order small.
class ProfileFunction {
 public:
  explicit ProfileFunction(double blend_start = kR1, double blend_end = kPi,
                           double tail_rate = 1.0)
      : blend_start_(blend_start),
        blend_end_(blend_end),
        tail_rate_(tail_rate),
        tail_amp_(std::sin(blend_start)) {
    if (!(blend_start > kR0) || !(blend_end > blend_start) ||
        !(tail_rate > 0.0))
      throw std::invalid_argument("ProfileFunction: bad blend parameters");
    check_monotone_decay();
  }

  double blend_start() const { return blend_start_; }
  double blend_end() const { return blend_end_; }
  double tail_rate() const { return tail_rate_; }

  /// f(r), f'(r) or f''(r) depending on order in {0, 1, 2}.
  double eval(double r, int order = 0) const {
    if (!(r > 0.0)) throw std::domain_error("ProfileFunction: r <= 0");
    if (r <= blend_start_) {
      switch (order) {
        case 0: return std::sin(r);
        case 1: return std::cos(r);
        case 2: return -std::sin(r);
        default: throw std::invalid_argument("ProfileFunction: bad order");
      }
    }
    if (order < 0 || order > 2)
      throw std::invalid_argument("ProfileFunction: bad order");
    const double w = blend_end_ - blend_start_;
    const Deriv2 beta = smoothstep((r - blend_start_) / w);
    const double bv = beta.v, b1 = beta.d1 / w, b2 = beta.d2 / (w * w);
    const double t = tail_amp_ * std::exp(-tail_rate_ * (r - blend_start_));
    const double t1 = -tail_rate_ * t;
    const double t2 = tail_rate_ * tail_rate_ * t;
    const double s = std::sin(r), s1 = std::cos(r), s2 = -s;
    switch (order) {
      case 0: return s + bv * (t - s);
      case 1: return s1 + b1 * (t - s) + bv * (t1 - s1);
      default:
        return s2 + b2 * (t - s) + 2.0 * b1 * (t1 - s1) + bv * (t2 - s2);
    }
  }

  double operator()(double r) const { return eval(r, 0); }

  /// Gaussian curvature K = -f''/f of the warped metric.
  double gaussian_curvature(double r) const {
    return -eval(r, 2) / eval(r, 0);
  }

  /// Nonzero Christoffel symbols of g = dr^2 + f^2 dtheta^2.
  struct Christoffel {
    double r_thth = 0.0; // Gamma^r_{theta theta} = -f f'
    double th_rth = 0.0; // Gamma^theta_{r theta} = f'/f
    double r_rr = 0.0;   // identically zero
    double th_thth = 0.0; // identically zero
  };

  Christoffel christoffel(double r) const {
    const double f = eval(r, 0), fp = eval(r, 1);
    return {-f * fp, fp / f, 0.0, 0.0};
  }

 private:
  void check_monotone_decay() const {
    // f' < 0 for r > pi/2 and f -> 0: sampled assertion at build time.
    const double r_hi = blend_start_ + 30.0;
    const int n = 6000;
    for (int i = 1; i <= n; ++i) {
      const double r = kR0 + (r_hi - kR0) * i / n;
      if (!(eval(r, 0) > 0.0))
        throw std::runtime_error("ProfileFunction: f not positive");
      if (r > kR0 + 1e-6 && !(eval(r, 1) < 0.0))
        throw std::runtime_error("ProfileFunction: f not decreasing past pi/2");
    }
    if (!(eval(r_hi, 0) < 1e-10))
      throw std::runtime_error("ProfileFunction: tail does not decay");
  }

  double blend_start_;
  double blend_end_;
  double tail_rate_;
  double tail_amp_;
};

/// Clairaut integral I(v) = g(d_theta, v) = f(r)^2 v_theta of a unit-speed
/// tangent vector.
inline double clairaut(const ProfileFunction& f, const TangentVector& v,
                       double unit_tol = 1e-8) {
  if (!(v.base.r > 0.0)) throw std::domain_error("clairaut: r <= 0");
  const double fr = f.eval(v.base.r, 0);
  const double speed2 = v.v_r * v.v_r + fr * fr * v.v_theta * v.v_theta;
  if (std::fabs(speed2 - 1.0) > unit_tol)
    throw std::invalid_argument("clairaut: vector not unit speed");
  return fr * fr * v.v_theta;
}

} // namespace geoscat
