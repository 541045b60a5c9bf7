#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoscat/constants.hpp"
#include "geoscat/deflection.hpp"
#include "geoscat/foliation.hpp"
#include "geoscat/metric_grid.hpp"
#include "geoscat/profile.hpp"
#include "geoscat/smoothstep.hpp"
#include "geoscat/sphere.hpp"
#include "geoscat/spline.hpp"

namespace geoscat {

/// Radius reached by the band launch from azimuth theta at arc parameter
/// delta: the end of the inner pinned segment of the leaf.
inline double inner_pin_radius(double phi, double delta) {
  return std::acos(-std::sin(delta) * std::cos(phi));
}

/// Leaf parameterization of the interpolated foliation.
///
/// Each leaf (graph r -> Theta(r, theta)) carries a parameter speed
/// sigma(r, theta) = ds/dr composed of the r-arclength speed
/// sigma_arc = sqrt(1 + f^2 Theta_r^2) plus a compactly supported interior
/// bump whose per-leaf coefficient deposits exactly the missing length, so
///   s = 0 at R0,   s = l_eps(theta) at R1,
/// while both pinned end segments keep their forced parameterizations:
/// unit-speed geodesic near R0 (inside arc parameter delta) and unit-speed
/// radial near R1 (within delta of the outer rim). All fields are stored
/// per radius row with analytic theta-derivatives, so downstream Jacobians
/// need no numerical differentiation.
struct PhiMap {
  TFoliation fol;
  DeflectionSpec spec;
  double delta = kDefaultDelta;
  bool reversed = false;
  std::vector<double> leaf_len;              // per launch node
  std::vector<PeriodicSpline> sigma_row;     // sigma(r_i, .)
  std::vector<PeriodicSpline> s_row;         // s(r_i, .)
  std::vector<PeriodicSpline> stheta_row;    // ds/dtheta (r_i, .)

  int n_radii() const { return fol.n_radii(); }
  int n_theta() const { return fol.n_theta(); }

  /// Leaf length of the leaf through launch azimuth theta.
  double leaf_length(double theta) const { return spec.leaf_length(theta); }

  struct Fields {
    double sigma, s, s_theta;
    double Theta, Theta_r, Theta_theta;
  };

  /// Leaf fields at radius r on the leaf launched from theta (column
  /// splines over the stored circles; exact at stored radii).
  Fields at(double r, double theta) const {
    const int n = n_radii();
    std::vector<double> sg(n), ss(n), st(n), tv(n), tr(n), tt(n);
    for (int i = 0; i < n; ++i) {
      sg[i] = sigma_row[i](theta);
      ss[i] = s_row[i](theta);
      st[i] = stheta_row[i](theta);
      tv[i] = theta + fol.maps[i].deviation(theta);
      tr[i] = fol.d_r[i](theta);
      tt[i] = fol.d_theta[i](theta);
    }
    Fields out{};
    out.sigma = CubicSpline(fol.radii, sg)(r);
    out.s = CubicSpline(fol.radii, ss)(r);
    out.s_theta = CubicSpline(fol.radii, st)(r);
    out.Theta = CubicSpline(fol.radii, tv)(r);
    out.Theta_r = CubicSpline(fol.radii, tr)(r);
    out.Theta_theta = CubicSpline(fol.radii, tt)(r);
    return out;
  }

  /// Position Phi(s, theta) (or the reversed map if `reversed`).
  PolarPoint position(double s, double theta) const {
    const double l = leaf_length(theta);
    const double s_fwd = reversed ? l - s : s;
    if (s_fwd < -1e-9 || s_fwd > l + 1e-9)
      throw std::domain_error("PhiMap::position: parameter outside leaf");
    // invert s(r) on the leaf (strictly increasing, sigma > 0)
    const int n = n_radii();
    std::vector<double> ss(n), tv(n);
    for (int i = 0; i < n; ++i) {
      ss[i] = s_row[i](theta);
      tv[i] = theta + fol.maps[i].deviation(theta);
    }
    CubicSpline scol(fol.radii, ss);
    double lo = kR0, hi = kR1;
    for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (scol(mid) < s_fwd ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    return PolarPoint::make(r, CubicSpline(fol.radii, tv)(r));
  }

  /// Jacobian columns dPhi/ds and dPhi/dtheta in (r, vartheta) components
  /// at parameter s on the leaf through theta (reversal-aware).
  void jacobian(double s, double theta, double E_s[2], double E_t[2]) const {
    const PolarPoint p = position(s, theta);
    const Fields F = at(p.r, theta);
    const double lp = spec.leaf_length_deriv(theta);
    const double sgn = reversed ? -1.0 : 1.0;
    E_s[0] = sgn / F.sigma;
    E_s[1] = sgn * F.Theta_r / F.sigma;
    // fixed-parameter theta-derivative; for the reversed map s_fwd = l - s
    // varies with theta through l
    const double dr_dth =
        (reversed ? (lp - F.s_theta) : -F.s_theta) / F.sigma;
    E_t[0] = dr_dth;
    E_t[1] = F.Theta_r * dr_dth + F.Theta_theta;
  }
};

/// Build the leaf parameterization of the interpolated foliation F.
inline PhiMap build_phi(const TFoliation& F, const DeflectionSpec& spec,
                        double delta = kDefaultDelta) {
  const int n_r = F.n_radii();
  const int n_th = F.n_theta();
  if (n_r < 8 || n_th < 16)
    throw std::invalid_argument("build_phi: grid too small");
  PhiMap P{F, spec, delta};
  const double r_b = kR1 - delta;

  // node fields, [i][j] layout
  std::vector<std::vector<double>> sig(n_r, std::vector<double>(n_th));
  std::vector<std::vector<double>> sv(n_r, std::vector<double>(n_th));
  std::vector<std::vector<double>> sth(n_r, std::vector<double>(n_th));
  P.leaf_len.resize(n_th);

  std::vector<double> sigma_arc(n_r), sigma_arc_th(n_r), w(n_r), w_th(n_r);
  for (int j = 0; j < n_th; ++j) {
    const double theta = kTwoPi * j / n_th;
    const double phi = spec.phi_eps(theta);
    const double dphi = spec.dphi_eps(theta);
    const double l = spec.leaf_length(theta);
    const double lp = spec.leaf_length_deriv(theta);
    P.leaf_len[j] = l;
    const double r_a = inner_pin_radius(phi, delta);
    const double sd = std::sin(delta), cp = std::cos(phi);
    const double ra_dth =
        -sd * std::sin(phi) / std::sqrt(1.0 - sd * sd * cp * cp) * dphi;
    const double span = r_b - r_a;

    for (int i = 0; i < n_r; ++i) {
      const double r = F.radii[i];
      const double f = std::sin(r);
      const double Tr = F.d_r[i].values()[j];
      const double Trt = F.d_rtheta[i].values()[j];
      sigma_arc[i] = std::sqrt(1.0 + f * f * Tr * Tr);
      sigma_arc_th[i] = f * f * Tr * Trt / sigma_arc[i];
      const double xi = (r - r_a) / span;
      const Deriv2 B = plateau_bump(xi);
      w[i] = B.v;
      w_th[i] = B.d1 * ra_dth * (r - r_b) / (span * span);
    }
    // one quadrature rule for everything keeps s(R1) = l exact
    CubicSpline sp_arc(F.radii, sigma_arc), sp_arc_th(F.radii, sigma_arc_th);
    CubicSpline sp_w(F.radii, w), sp_wth(F.radii, w_th);
    const double A = sp_arc.antiderivative(kR1);
    const double Ath = sp_arc_th.antiderivative(kR1);
    const double W = sp_w.antiderivative(kR1);
    const double Wth = sp_wth.antiderivative(kR1);
    const double c = (l - A) / W;
    const double c_th = (lp - Ath) / W - (l - A) * Wth / (W * W);

    std::vector<double> sig_col(n_r), sth_col(n_r);
    for (int i = 0; i < n_r; ++i) {
      sig_col[i] = sigma_arc[i] + c * w[i];
      if (!(sig_col[i] > 1e-6))
        throw std::runtime_error(
            "build_phi: parameter speed lost positivity");
      sth_col[i] = sigma_arc_th[i] + c_th * w[i] + c * w_th[i];
    }
    CubicSpline sp_sig(F.radii, sig_col), sp_sth(F.radii, sth_col);
    for (int i = 0; i < n_r; ++i) {
      sig[i][j] = sig_col[i];
      sv[i][j] = sp_sig.antiderivative(F.radii[i]);
      sth[i][j] = sp_sth.antiderivative(F.radii[i]);
    }
  }
  for (int i = 0; i < n_r; ++i) {
    P.sigma_row.emplace_back(kTwoPi, sig[i]);
    P.s_row.emplace_back(kTwoPi, sv[i]);
    P.stheta_row.emplace_back(kTwoPi, sth[i]);
  }
  return P;
}

/// Reversed parameterization: Phi~(s, theta) = Phi(l(theta) - s, theta).
inline PhiMap reverse_phi(const PhiMap& P) {
  PhiMap Q = P;
  Q.reversed = !P.reversed;
  return Q;
}

/// Assemble the perturbed metric on the polar grid from the reversed leaf
/// parameterization: declare unit leaf speed, leaf-orthogonality of the
/// theta direction, and the unperturbed squared length of dPhi~/dtheta,
/// then push the frame metric through the inverse Jacobian at each node.
inline MetricGrid assemble_metric(const PhiMap& P, const ProfileFunction&) {
  if (!P.reversed)
    throw std::invalid_argument("assemble_metric: needs the reversed map");
  const int n_r = P.n_radii();
  const int n_th = P.n_theta();
  MetricGrid G;
  G.n_r = n_r;
  G.n_theta = n_th;
  G.epsilon = P.spec.epsilon();
  G.amplitude = P.spec.amplitude();
  G.delta = P.delta;
  const size_t n = static_cast<size_t>(n_r) * n_th;
  G.g_rr.resize(n);
  G.g_rt.resize(n);
  G.g_tt.resize(n);

  for (int i = 0; i < n_r; ++i) {
    const double r = P.fol.radii[i];
    const double f = std::sin(r);
    for (int j = 0; j < n_th; ++j) {
      const double vth = kTwoPi * j / n_th;        // node azimuth
      const double th = P.fol.maps[i].invert(vth); // launch azimuth
      const double sigma = P.sigma_row[i](th);
      const double s_theta = P.stheta_row[i](th);
      const double Tr = P.fol.d_r[i](th);
      const double Tt = P.fol.d_theta[i](th);
      const double lp = P.spec.leaf_length_deriv(th);

      // Jacobian d(r, vartheta)/d(s~, theta) of the reversed map
      const double a = (lp - s_theta) / sigma;
      const double J11 = -1.0 / sigma, J12 = a;
      const double J21 = -Tr / sigma, J22 = Tr * a + Tt;
      const double det = J11 * J22 - J12 * J21; // = -Tt / sigma
      if (std::fabs(det) < 1e-8)
        throw std::runtime_error(
            "assemble_metric: degenerate leaf parameterization");
      const double q = J12 * J12 + f * f * J22 * J22; // round |dPhi~/dtheta|^2
      // G = J^{-T} diag(1, q) J^{-1}
      const double K11 = J22 / det, K12 = -J12 / det;
      const double K21 = -J21 / det, K22 = J11 / det;
      const double grr = K11 * K11 + q * K21 * K21;
      const double grt = K11 * K12 + q * K21 * K22;
      const double gtt = K12 * K12 + q * K22 * K22;
      const double tr = grr + gtt;
      // discriminant as a sum of squares (tr^2 - 4 det cancels badly)
      const double disc = std::sqrt((grr - gtt) * (grr - gtt) +
                                    4.0 * grt * grt);
      if (!(0.5 * (tr - disc) > 1e-8))
        throw std::runtime_error("assemble_metric: metric lost positivity");
      const size_t k = G.idx(i, j);
      G.g_rr[k] = grr;
      G.g_rt[k] = grt;
      G.g_tt[k] = gtt;
    }
  }
  return G;
}

// ---------------------------------------------------------------------------
// Construction verification
// ---------------------------------------------------------------------------

struct ForgeCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ForgeReport {
  std::vector<ForgeCheck> checks;
  double margin_inner = 0.0; // measured coincidence margins of the box
  double margin_outer = 0.0;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const ForgeCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Verify the assembled metric against the defining identities of the
/// construction: unit leaf speed and flat leaf coordinates, end-band
/// orthogonality, the first-variation identity for the leaf length, leaf
/// coverage and monotonicity, and coincidence with the round metric
/// outside the perturbation box.
inline ForgeReport verify_construction(const MetricGrid& G, const PhiMap& P,
                                       const DeflectionSpec& spec,
                                       double tol = 2e-5) {
  if (!P.reversed)
    throw std::invalid_argument("verify_construction: needs the reversed map");
  ForgeReport rep;
  MetricField field(G);

  // (a) leaf-coordinate residuals: pull the interpolated metric back
  // through the Jacobian; the frame metric must be diag(1, *) with the
  // first column parameter-independent.
  double res_unit = 0.0, res_ortho_deriv = 0.0;
  const int NS = 24, NT = 48;
  for (int jt = 0; jt < NT; ++jt) {
    const double theta = kTwoPi * (jt + 0.37) / NT;
    const double l = P.leaf_length(theta);
    for (int is = 0; is <= NS; ++is) {
      const double s = l * (0.015 + 0.97 * is / NS);
      auto frame = [&](double s_) {
        double Es[2], Et[2];
        P.jacobian(s_, theta, Es, Et);
        const PolarPoint p = P.position(s_, theta);
        const auto c = field.eval(p.r, p.theta);
        const double mss = c.rr * Es[0] * Es[0] +
                           2.0 * c.rt * Es[0] * Es[1] +
                           c.tt * Es[1] * Es[1];
        const double mst = c.rr * Es[0] * Et[0] +
                           c.rt * (Es[0] * Et[1] + Es[1] * Et[0]) +
                           c.tt * Es[1] * Et[1];
        return std::pair<double, double>(mss, mst);
      };
      const auto [mss, mst] = frame(s);
      res_unit = std::max(res_unit, std::fabs(mss - 1.0));
      const double h = 1e-4 * l;
      if (s > h && s < l - h) {
        const auto [mss_p, mst_p] = frame(s + h);
        const auto [mss_m, mst_m] = frame(s - h);
        (void)mss_p; (void)mss_m;
        res_ortho_deriv =
            std::max(res_ortho_deriv, std::fabs((mst_p - mst_m) / (2 * h)));
      }
    }
  }
  rep.checks.push_back({"leaf_unit_speed", res_unit, tol, res_unit < tol});
  rep.checks.push_back({"leaf_orthogonality_flat", res_ortho_deriv, tol,
                        res_ortho_deriv < tol});

  // (b) end-band orthogonality of the reversed map in the unperturbed
  // metric (the identity that makes the gluing geodesic-compatible).
  double res_end = 0.0;
  for (int jt = 0; jt < NT; ++jt) {
    const double theta = kTwoPi * (jt + 0.11) / NT;
    const double l = P.leaf_length(theta);
    for (double s : {0.1 * P.delta, 0.5 * P.delta, 0.9 * P.delta,
                     l - 0.9 * P.delta, l - 0.5 * P.delta,
                     l - 0.1 * P.delta}) {
      double Es[2], Et[2];
      P.jacobian(s, theta, Es, Et);
      const PolarPoint p = P.position(s, theta);
      const double f = std::sin(p.r);
      const double ip = Es[0] * Et[0] + f * f * Es[1] * Et[1];
      res_end = std::max(res_end, std::fabs(ip));
    }
  }
  rep.checks.push_back({"end_band_orthogonality", res_end, tol, res_end < tol});

  // (c) first-variation identity: d l_eps/d theta = -sin(phi_eps), checked
  // by finite differences of the quadrature-evaluated length.
  double res_fv = 0.0;
  const double h = 1e-5;
  for (int jt = 0; jt < 73; ++jt) {
    const double theta = kTwoPi * jt / 73.0;
    const double fd =
        (spec.leaf_length(theta + h) - spec.leaf_length(theta - h)) / (2 * h);
    res_fv = std::max(res_fv,
                      std::fabs(-fd - std::sin(spec.phi_eps(theta))));
  }
  rep.checks.push_back({"first_variation", res_fv, std::max(tol, 1e-8),
                        res_fv < std::max(tol, 1e-8)});

  // (d) leaf coverage: the inner pinned segment reaches past R0 + delta/2.
  double cover = 1e300;
  for (int j = 0; j < P.n_theta(); ++j) {
    const double phi = spec.phi_eps(kTwoPi * j / P.n_theta());
    cover = std::min(cover,
                     inner_pin_radius(phi, P.delta) - (kR0 + 0.5 * P.delta));
  }
  rep.checks.push_back({"inner_coverage", cover, 0.0, cover > 0.0});

  // (e) parameter monotonicity: min sigma over all stored nodes.
  double min_sigma = 1e300;
  for (int i = 0; i < P.n_radii(); ++i)
    for (double v : P.sigma_row[i].values()) min_sigma = std::min(min_sigma, v);
  rep.checks.push_back({"sigma_positive", min_sigma, 0.0, min_sigma > 0.0});

  // (f) coincidence with the round metric outside the perturbation box.
  double dead_zone = 0.0;
  std::vector<double> row_dev(G.n_r, 0.0);
  for (int i = 0; i < G.n_r; ++i) {
    const double f2 = std::pow(std::sin(G.r0 + G.dr() * i), 2);
    for (int j = 0; j < G.n_theta; ++j) {
      const size_t k = G.idx(i, j);
      const double dev = std::max(
          {std::fabs(G.g_rr[k] - 1.0), std::fabs(G.g_rt[k]),
           std::fabs(G.g_tt[k] - f2)});
      row_dev[i] = std::max(row_dev[i], dev);
      const double vth = G.dtheta() * j;
      if (vth >= kPi || vth == 0.0) dead_zone = std::max(dead_zone, dev);
    }
  }
  rep.checks.push_back({"dead_zone_round", dead_zone, 1e-9, dead_zone < 1e-9});
  int first = 0, last = G.n_r - 1;
  while (first < G.n_r && row_dev[first] < 1e-9) ++first;
  while (last >= 0 && row_dev[last] < 1e-9) --last;
  rep.margin_inner = first >= G.n_r ? kBandWidth : G.dr() * first;
  rep.margin_outer = last < 0 ? kBandWidth : G.dr() * (G.n_r - 1 - last);
  return rep;
}

/// One-call construction: launches, foliations, interpolation, leaf
/// parameterization, reversal, metric assembly.
struct ForgeResult {
  TFoliation foliation;
  PhiMap phi;      // reversed map used for the assembly
  MetricGrid grid;
};

inline ForgeResult forge_metric(const DeflectionSpec& spec,
                                const ProfileFunction& f, int n_r = 257,
                                int n_theta = 1024,
                                double delta = kDefaultDelta) {
  if (!transversality_check(spec, n_theta))
    throw std::runtime_error("forge_metric: launches do not foliate the band");
  std::vector<GreatCircleArc> arcs;
  arcs.reserve(n_theta);
  for (int j = 0; j < n_theta; ++j)
    arcs.push_back(band_shoot(spec, kTwoPi * j / n_theta, 2));
  TFoliation Fg = foliation_from_arcs(arcs, spec, n_r);
  TFoliation Fr = radial_foliation(n_r, n_theta);
  TFoliation F = interpolate_foliations(Fg, Fr, delta);
  PhiMap P = reverse_phi(build_phi(F, spec, delta));
  MetricGrid G = assemble_metric(P, f);
  return {std::move(F), std::move(P), std::move(G)};
}

} // namespace geoscat
