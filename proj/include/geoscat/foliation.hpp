#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "geoscat/constants.hpp"
#include "geoscat/deflection.hpp"
#include "geoscat/smoothstep.hpp"
#include "geoscat/sphere.hpp"
#include "geoscat/spline.hpp"

namespace geoscat {

/// Orientation-preserving circle diffeomorphism represented by its lift
/// F(theta) = theta + d(theta) with d periodic, sampled on a uniform grid
/// and interpolated by a periodic cubic spline. Monotonicity (F' > 0) is
/// verified at construction.
class CircleDiffeoLift {
 public:
  CircleDiffeoLift() = default;

  /// dev[k] = F(2 pi k / n) - 2 pi k / n.
  explicit CircleDiffeoLift(std::vector<double> dev)
      : dev_nodes_(std::move(dev)), dev_(kTwoPi, dev_nodes_) {
    const int n = static_cast<int>(dev_nodes_.size());
    for (int k = 0; k < 4 * n; ++k) {
      const double th = kTwoPi * k / (4 * n);
      if (!(deriv(th) > 0.0))
        throw std::runtime_error("CircleDiffeoLift: lift not monotone");
    }
  }

  static CircleDiffeoLift identity(int n) {
    return CircleDiffeoLift(std::vector<double>(n, 0.0));
  }

  double operator()(double theta) const { return theta + dev_(theta); }
  double deriv(double theta) const { return 1.0 + dev_.deriv(theta); }
  double deviation(double theta) const { return dev_(theta); }

  /// Solve F(theta) = target on the monotone lift (unique mod 2 pi; the
  /// branch containing target is returned).
  double invert(double target) const {
    double lo = target - max_abs_dev() - 1e-12;
    double hi = target + max_abs_dev() + 1e-12;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((*this)(mid) < target ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) // Newton polish
      x -= ((*this)(x)-target) / deriv(x);
    return x;
  }

  const std::vector<double>& deviation_nodes() const { return dev_nodes_; }
  int size() const { return static_cast<int>(dev_nodes_.size()); }

 private:
  double max_abs_dev() const {
    double m = 0.0;
    for (double d : dev_nodes_) m = std::max(m, std::fabs(d));
    return m + 0.1; // spline overshoot headroom
  }

  std::vector<double> dev_nodes_;
  PeriodicSpline dev_;
};

/// Pointwise affine combination of two lifts: (1-lambda) f0 + lambda f1.
/// A shared value f0(t) = f1(t) is preserved for every lambda.
inline CircleDiffeoLift affine_combination(const CircleDiffeoLift& f0,
                                           const CircleDiffeoLift& f1,
                                           double lambda) {
  if (f0.size() != f1.size())
    throw std::invalid_argument("affine_combination: node count mismatch");
  std::vector<double> dev(f0.size());
  for (int k = 0; k < f0.size(); ++k)
    dev[k] = (1.0 - lambda) * f0.deviation_nodes()[k] +
             lambda * f1.deviation_nodes()[k];
  return CircleDiffeoLift(std::move(dev));
}

/// Foliation of the band [R0, R1] x S^1 transverse to all circles, encoded
/// as the family of circle maps S(r): launch azimuth -> azimuth at radius r.
/// Alongside the maps Theta(r, theta) it carries analytic derivative fields
/// dTheta/dr, dTheta/dtheta, d2Theta/dr dtheta sampled on the same grid, so
/// downstream Jacobians avoid numerical differentiation across radii.
struct TFoliation {
  std::vector<double> radii;            // R0 = r_0 < ... < r_N = R1
  std::vector<CircleDiffeoLift> maps;   // Theta(r_i, .)
  std::vector<PeriodicSpline> d_r;      // dTheta/dr (r_i, .)
  std::vector<PeriodicSpline> d_theta;  // dTheta/dtheta (r_i, .)
  std::vector<PeriodicSpline> d_rtheta; // d2Theta/dr dtheta (r_i, .)

  int n_radii() const { return static_cast<int>(radii.size()); }
  int n_theta() const { return maps.empty() ? 0 : maps.front().size(); }
};

/// Foliation whose leaves are the radial segments: S(r) = id at every r.
inline TFoliation radial_foliation(int n_radii, int n_theta) {
  TFoliation F;
  F.radii.resize(n_radii);
  std::vector<double> zero(n_theta, 0.0), one(n_theta, 1.0);
  for (int i = 0; i < n_radii; ++i) {
    F.radii[i] = kR0 + kBandWidth * i / (n_radii - 1);
    F.maps.push_back(CircleDiffeoLift::identity(n_theta));
    F.d_r.emplace_back(kTwoPi, zero);
    F.d_theta.emplace_back(kTwoPi, one);
    F.d_rtheta.emplace_back(kTwoPi, zero);
  }
  return F;
}

/// Foliation of the band by the launched great-circle arcs. arcs[j] must be
/// the launch from azimuth 2 pi j / n_theta; spec supplies the analytic
/// derivative of the launch angle for the companion fields.
inline TFoliation foliation_from_arcs(const std::vector<GreatCircleArc>& arcs,
                                      const DeflectionSpec& spec,
                                      int n_radii) {
  const int n_theta = static_cast<int>(arcs.size());
  if (n_theta < 8) throw std::invalid_argument("foliation_from_arcs: too few arcs");
  TFoliation F;
  F.radii.resize(n_radii);
  for (int i = 0; i < n_radii; ++i) {
    const double r = kR0 + kBandWidth * i / (n_radii - 1);
    F.radii[i] = r;
    std::vector<double> dev(n_theta), dr(n_theta), dth(n_theta), drth(n_theta);
    for (int j = 0; j < n_theta; ++j) {
      const double theta = kTwoPi * j / n_theta;
      const double phi = arcs[j].phi;
      const double dphi = spec.dphi_eps(theta);
      dev[j] = azimuth_advance(r, phi);
      dr[j] = azimuth_advance_dr(r, phi);
      dth[j] = 1.0 + azimuth_advance_dphi(r, phi) * dphi;
      drth[j] = azimuth_advance_drdphi(r, phi) * dphi;
    }
    try {
      F.maps.emplace_back(std::move(dev));
    } catch (const std::runtime_error&) {
      throw std::runtime_error(
          "foliation_from_arcs: circle-intersection map not monotone");
    }
    F.d_r.emplace_back(kTwoPi, dr);
    F.d_theta.emplace_back(kTwoPi, dth);
    F.d_rtheta.emplace_back(kTwoPi, drth);
  }
  return F;
}

/// Blend profile lambda(r): 0 on [R0, R0+delta], 1 on [R1-delta, R1], flat
/// to all orders at the seams.
inline Deriv2 foliation_blend(double r, double delta) {
  const double w = kBandWidth - 2.0 * delta;
  Deriv2 lam = smoothstep((r - kR0 - delta) / w);
  lam.d1 /= w;
  lam.d2 /= w * w;
  return lam;
}

/// Interpolation between two foliations: S(r) = (1-lambda(r)) S0(r) +
/// lambda(r) S1(r) through lifts. Coincides with F0 near r = R0 and with F1
/// near r = R1; shared leaves of F0 and F1 stay leaves.
inline TFoliation interpolate_foliations(const TFoliation& F0,
                                         const TFoliation& F1, double delta) {
  if (F0.n_radii() != F1.n_radii() || F0.n_theta() != F1.n_theta())
    throw std::invalid_argument("interpolate_foliations: grid mismatch");
  // precondition: shared leaf through azimuth 0 (the normalization leaf)
  for (int i = 0; i < F0.n_radii(); ++i) {
    if (std::fabs(F0.maps[i].deviation_nodes()[0] -
                  F1.maps[i].deviation_nodes()[0]) > 1e-12)
      throw std::runtime_error(
          "interpolate_foliations: foliations do not share the leaf at 0");
  }
  const int n_theta = F0.n_theta();
  TFoliation F;
  F.radii = F0.radii;
  for (int i = 0; i < F0.n_radii(); ++i) {
    const Deriv2 lam = foliation_blend(F.radii[i], delta);
    F.maps.push_back(affine_combination(F0.maps[i], F1.maps[i], lam.v));
    std::vector<double> dr(n_theta), dth(n_theta), drth(n_theta);
    for (int j = 0; j < n_theta; ++j) {
      const double th = kTwoPi * j / n_theta;
      const double t0 = th + F0.maps[i].deviation_nodes()[j];
      const double t1 = th + F1.maps[i].deviation_nodes()[j];
      const double dr0 = F0.d_r[i].values()[j], dr1 = F1.d_r[i].values()[j];
      const double dt0 = F0.d_theta[i].values()[j],
                   dt1 = F1.d_theta[i].values()[j];
      dr[j] = (1.0 - lam.v) * dr0 + lam.v * dr1 + lam.d1 * (t1 - t0);
      dth[j] = (1.0 - lam.v) * dt0 + lam.v * dt1;
      drth[j] = (1.0 - lam.v) * F0.d_rtheta[i].values()[j] +
                lam.v * F1.d_rtheta[i].values()[j] + lam.d1 * (dt1 - dt0);
    }
    F.d_r.emplace_back(kTwoPi, dr);
    F.d_theta.emplace_back(kTwoPi, dth);
    F.d_rtheta.emplace_back(kTwoPi, drth);
  }
  return F;
}

/// Azimuth of the leaf through (R0, theta) at radius r, cubic Hermite in r
/// between the stored circles using the analytic radial derivatives.
inline double leaf_lookup(const TFoliation& F, double theta, double r) {
  if (r < kR0 - 1e-12 || r > kR1 + 1e-12)
    throw std::domain_error("leaf_lookup: radius outside the band");
  const int N = F.n_radii() - 1;
  double x = (r - kR0) / kBandWidth * N;
  int i = std::min(N - 1, std::max(0, static_cast<int>(std::floor(x))));
  const double h = F.radii[i + 1] - F.radii[i];
  const double t = (r - F.radii[i]) / h;
  const double y0 = theta + F.maps[i].deviation(theta);
  const double y1 = theta + F.maps[i + 1].deviation(theta);
  const double m0 = F.d_r[i](theta) * h;
  const double m1 = F.d_r[i + 1](theta) * h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 +
         (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
}

} // namespace geoscat
