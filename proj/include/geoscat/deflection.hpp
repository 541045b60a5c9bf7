#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoscat/constants.hpp"
#include "geoscat/quadrature.hpp"

namespace geoscat {

/// Deflection profile phi and the scaled family phi_eps = eps * phi.
///
/// phi(theta) = N * sin(2 theta) * exp(-1/sqrt(theta (pi - theta))) on
/// (0, pi) and 0 on [pi, 2 pi], with N chosen so max |phi| = amplitude.
/// This shape is C^inf (flat to all orders at 0 and pi), antisymmetric
/// about pi/2, and vanishes exactly on {pi/2} united with [pi, 2 pi].
/// The square root in the exponent keeps phi at working magnitude within
/// a degree of the endpoints, so the deflection of near-radial launches
/// stays far above integrator noise.
class DeflectionSpec {
 public:
  explicit DeflectionSpec(double epsilon, double amplitude = 1.0,
                          int quadrature_nodes = 1024)
      : epsilon_(epsilon),
        amplitude_(amplitude),
        quadrature_nodes_(quadrature_nodes) {
    if (!(amplitude > 0.0))
      throw std::invalid_argument("DeflectionSpec: amplitude <= 0");
    if (quadrature_nodes < 16)
      throw std::invalid_argument("DeflectionSpec: too few quadrature nodes");
    norm_ = amplitude_ / peak_raw();
  }

  double epsilon() const { return epsilon_; }
  double amplitude() const { return amplitude_; }
  int quadrature_nodes() const { return quadrature_nodes_; }

  /// Unscaled deflection profile, peak |phi| = amplitude.
  double phi(double theta) const {
    if (phi_override) return phi_override(wrap_angle(theta));
    return norm_ * raw(wrap_angle(theta));
  }

  /// d phi / d theta.
  double dphi(double theta) const {
    if (phi_override) { // numeric fallback for injected shapes
      const double h = 1e-6;
      return (phi(theta + h) - phi(theta - h)) / (2.0 * h);
    }
    return norm_ * raw_deriv(wrap_angle(theta));
  }

  double phi_eps(double theta) const { return epsilon_ * phi(theta); }
  double dphi_eps(double theta) const { return epsilon_ * dphi(theta); }

  /// Prescribed leaf length l_eps(theta) = pi/4 - integral_0^theta
  /// sin(phi_eps).
  double leaf_length(double theta) const {
    double v = kPi / 4.0;
    if (epsilon_ != 0.0 && theta != 0.0) {
      // integrand vanishes identically on [pi, 2pi]
      const double hi = std::min(theta, kPi);
      if (hi > 0.0)
        v -= integrate([this](double t) { return std::sin(phi_eps(t)); }, 0.0,
                       hi, 1e-13);
    }
    if (!(v > 0.0))
      throw std::runtime_error("DeflectionSpec: leaf length <= 0 (epsilon too large)");
    return v;
  }

  /// d l_eps / d theta = -sin(phi_eps(theta)).
  double leaf_length_deriv(double theta) const {
    return -std::sin(phi_eps(theta));
  }

  /// Validation report entry: one invariant, its residual, pass flag.
  struct Check {
    std::string name;
    double residual = 0.0;
    bool pass = false;
  };
  struct Report {
    std::vector<Check> checks;
    bool all_pass() const {
      for (const auto& c : checks)
        if (!c.pass) return false;
      return true;
    }
  };

  Report validate() const {
    Report rep;
    const int n = quadrature_nodes_;
    // antisymmetry about pi/2
    double anti = 0.0;
    for (int i = 1; i < 1000; ++i) {
      const double t = kR0 * i / 1000.0;
      anti = std::max(anti, std::fabs(phi(kR0 + t) + phi(kR0 - t)));
    }
    rep.checks.push_back({"antisymmetry", anti, anti < 1e-14 * std::max(1.0, amplitude_)});
    // zero set: phi == 0 on [pi, 2pi] and at pi/2, nonzero elsewhere in (0, pi)
    double on_zero = 0.0;
    for (int i = 0; i <= n; ++i)
      on_zero = std::max(on_zero, std::fabs(phi(kPi + kPi * i / n)));
    on_zero = std::max(on_zero, std::fabs(phi(kR0)));
    rep.checks.push_back({"zero_on_half_circle", on_zero, on_zero == 0.0});
    double min_interior = 1e300;
    for (int i = 1; i < n; ++i) {
      const double t = kPi * i / n;
      if (std::fabs(t - kR0) < 0.05) continue;
      if (t < 0.02 || t > kPi - 0.02) continue;
      min_interior = std::min(min_interior, std::fabs(phi(t)));
    }
    rep.checks.push_back(
        {"nonzero_interior", min_interior, min_interior > 0.0});
    // amplitude bound |phi_eps| < pi/4
    double peak = 0.0;
    for (int i = 0; i <= 4 * n; ++i)
      peak = std::max(peak, std::fabs(phi_eps(kTwoPi * i / (4 * n))));
    rep.checks.push_back({"phi_eps_below_pi_over_4", peak, peak < kPi / 4.0});
    // leaf length positivity
    double min_leaf = 1e300;
    bool leaf_ok = true;
    try {
      for (int i = 0; i <= n; ++i)
        min_leaf = std::min(min_leaf, leaf_length(kTwoPi * i / n));
    } catch (const std::runtime_error&) {
      leaf_ok = false;
      min_leaf = 0.0;
    }
    rep.checks.push_back({"leaf_length_positive", min_leaf, leaf_ok});
    // zero mean of sin(phi_eps) over the full circle
    const double mean =
        integrate([this](double t) { return std::sin(phi_eps(t)); }, 0.0,
                  kTwoPi, 1e-13);
    rep.checks.push_back({"sin_phi_eps_zero_mean", std::fabs(mean),
                          std::fabs(mean) < 1e-12});
    return rep;
  }

  /// Test hook: replace the built-in shape (used to exercise validation
  /// failures). Takes theta already reduced to [0, 2pi).
  std::function<double(double)> phi_override;

 private:
  // Written in the variable t = theta - pi/2 so the zero at pi/2 and the
  // antisymmetry about it hold exactly in floating point:
  // sin(2 theta) = -sin(2t).
  static double raw(double theta) {
    if (theta <= 0.0 || theta >= kPi) return 0.0;
    const double t = theta - kR0;
    if (t == 0.0) return 0.0;
    const double q = theta * (kPi - theta);
    return -std::sin(2.0 * t) * std::exp(-1.0 / std::sqrt(q));
  }

  static double raw_deriv(double theta) {
    if (theta <= 0.0 || theta >= kPi) return 0.0;
    const double t = theta - kR0;
    const double q = theta * (kPi - theta);
    const double p = std::sqrt(q);
    const double e = std::exp(-1.0 / p);
    // d/dtheta exp(-1/p) = e p'/p^2 with p' = (pi - 2 theta)/(2p) = -t/p
    return e * (-2.0 * std::cos(2.0 * t) + std::sin(2.0 * t) * t / (p * q));
  }

  static double peak_raw() {
    // coarse scan then ternary refinement of |raw| on (0, pi/2)
    double best_t = 0.5, best = 0.0;
    for (int i = 1; i < 4000; ++i) {
      const double t = kR0 * i / 4000.0;
      const double v = std::fabs(raw(t));
      if (v > best) { best = v; best_t = t; }
    }
    double lo = best_t - kR0 / 4000.0, hi = best_t + kR0 / 4000.0;
    for (int it = 0; it < 200; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (std::fabs(raw(m1)) < std::fabs(raw(m2))) lo = m1; else hi = m2;
    }
    return std::fabs(raw(0.5 * (lo + hi)));
  }

  double epsilon_;
  double amplitude_;
  int quadrature_nodes_;
  double norm_ = 1.0;
};

} // namespace geoscat
