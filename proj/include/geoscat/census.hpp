#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "geoscat/constants.hpp"
#include "geoscat/deflection.hpp"
#include "geoscat/geodesic_flow.hpp"
#include "geoscat/metric_grid.hpp"
#include "geoscat/profile.hpp"

namespace geoscat {

// ---------------------------------------------------------------------------
// Scattering experiment: shoot the inward radial geodesic from (R1, theta)
// and record where and at which angle it meets the inner rim {R0}.

struct ScatterRecord {
  double theta_in = 0.0;
  double arrival_azimuth = 0.0;  // azimuth at the inner rim
  double azimuth_error = 0.0;    // |arrival_azimuth - theta_in| (wrapped)
  double arrival_angle = 0.0;    // angle of the arrival direction to the rim
  double angle_deviation = 0.0;  // arrival_angle - (pi/2 + phi_eps(theta))
  double measured_length = 0.0;  // arclength from R1 to R0
  bool ok = false;
  std::string error;
};

inline ScatterRecord scatter_one(const MetricField* field,
                                 const ProfileFunction& f,
                                 const DeflectionSpec& spec, double theta,
                                 const TraceOptions& opts = {}) {
  ScatterRecord rec;
  rec.theta_in = wrap_angle(theta);
  GeodesicState start;
  start.pos = PolarPoint::make(kR1, theta);
  start.v_r = -1.0;
  start.v_theta = 0.0;
  try {
    const auto tr = trace(field, f, start, 2.0, opts);
    for (const auto& e : tr.events) {
      if (e.type == "cap_entry") {
        rec.arrival_azimuth = e.theta;
        rec.azimuth_error = std::fabs(angle_diff(e.theta, theta));
        // crossing_angle is atan2(f v_th, v_r); the angle to the positive
        // azimuthal rim direction is acos(sin(crossing_angle)).
        rec.arrival_angle = std::acos(
            std::max(-1.0, std::min(1.0, std::sin(e.crossing_angle))));
        rec.angle_deviation =
            rec.arrival_angle - (0.5 * kPi + spec.phi_eps(rec.theta_in));
        rec.measured_length = e.s;
        rec.ok = true;
        break;
      }
    }
    if (!rec.ok) rec.error = "no inner-rim arrival within horizon";
  } catch (const std::exception& ex) {
    rec.error = ex.what();
  }
  return rec;
}

inline std::vector<ScatterRecord> scatter_experiment(
    const MetricField* field, const ProfileFunction& f,
    const DeflectionSpec& spec, int n_theta, const TraceOptions& opts = {}) {
  if (n_theta < 4) throw std::invalid_argument("scatter_experiment: n_theta");
  std::vector<ScatterRecord> out(n_theta);
  std::atomic<int> next{0};
  const unsigned n_workers =
      std::max(1u, std::thread::hardware_concurrency());
  auto work = [&] {
    for (int j = next.fetch_add(1); j < n_theta; j = next.fetch_add(1))
      out[j] = scatter_one(field, f, spec, kTwoPi * j / n_theta, opts);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------------------
// Radial return: the full candidate line through the cap and back out.

struct ReturnRecord {
  double theta_minus = 0.0;
  double theta_plus = 0.0;  // azimuth of the outward rim exit
  double deviation = 0.0;   // exit direction angle to the radial direction
  bool ok = false;
  std::string error;
};

/// Extracts the outward rim exit following the first cap transit.
inline ReturnRecord analyze_return(const GeodesicTrace& tr,
                                   double theta_minus) {
  ReturnRecord rec;
  rec.theta_minus = wrap_angle(theta_minus);
  double s_exit_cap = -1.0;
  for (const auto& e : tr.events) {
    if (e.type == "cap_exit" && s_exit_cap < 0.0) s_exit_cap = e.s;
    if (e.type == "cross_R1_out" && s_exit_cap >= 0.0 && e.s > s_exit_cap) {
      rec.theta_plus = e.theta;
      double d = e.crossing_angle;
      while (d > kPi) d -= kTwoPi;
      while (d < -kPi) d += kTwoPi;
      rec.deviation = std::fabs(d);
      rec.ok = true;
      return rec;
    }
  }
  rec.error = tr.truncated ? tr.error : "no outward rim exit after the cap";
  return rec;
}

inline ReturnRecord radial_return(const MetricField* field,
                                  const ProfileFunction& f,
                                  const DeflectionSpec& /*spec*/,
                                  double theta_minus, double s_max = 12.0,
                                  const TraceOptions& opts = {}) {
  GeodesicState start;
  start.pos = PolarPoint::make(kR1, theta_minus);
  start.v_r = -1.0;
  try {
    return analyze_return(trace(field, f, start, s_max, opts), theta_minus);
  } catch (const std::exception& ex) {
    ReturnRecord rec;
    rec.theta_minus = wrap_angle(theta_minus);
    rec.error = ex.what();
    return rec;
  }
}

// ---------------------------------------------------------------------------
// Planar self-intersection of a trace.

struct IntersectionEvent {
  double s1 = 0.0, s2 = 0.0;  // arclengths of the two strands (s1 < s2)
  double x = 0.0, y = 0.0;    // planar crossing point
  double angle = 0.0;         // crossing angle between the strands
};

namespace detail {

struct Seg {
  double x0, y0, x1, y1, s0, s1;
};

inline double seg_point_dist2(double px, double py, const Seg& s, double& t) {
  const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
  const double L2 = dx * dx + dy * dy;
  t = L2 > 0 ? std::max(0.0, std::min(1.0, ((px - s.x0) * dx +
                                            (py - s.y0) * dy) /
                                               L2))
             : 0.0;
  const double qx = s.x0 + t * dx - px, qy = s.y0 + t * dy - py;
  return qx * qx + qy * qy;
}

/// Exact proper intersection, else closest approach below near_tol.
inline bool seg_intersect(const Seg& a, const Seg& b, double near_tol,
                          double& ta, double& tb, double& angle) {
  const double rx = a.x1 - a.x0, ry = a.y1 - a.y0;
  const double sx = b.x1 - b.x0, sy = b.y1 - b.y0;
  const double den = rx * sy - ry * sx;
  const double qx = b.x0 - a.x0, qy = b.y0 - a.y0;
  if (std::fabs(den) > 1e-14) {
    ta = (qx * sy - qy * sx) / den;
    tb = (qx * ry - qy * rx) / den;
    if (ta >= 0.0 && ta <= 1.0 && tb >= 0.0 && tb <= 1.0) {
      angle = std::fabs(std::atan2(den, rx * sx + ry * sy));
      return true;
    }
  }
  // closest-approach fallback for near-parallel overlapping strands
  double best = 1e300, u;
  auto upd = [&](double px, double py, const Seg& s, double tp, bool first) {
    const double d2 = seg_point_dist2(px, py, s, u);
    if (d2 < best) {
      best = d2;
      if (first) {
        ta = tp;
        tb = u;
      } else {
        ta = u;
        tb = tp;
      }
    }
  };
  upd(a.x0, a.y0, b, 0.0, true);
  upd(a.x1, a.y1, b, 1.0, true);
  upd(b.x0, b.y0, a, 0.0, false);
  upd(b.x1, b.y1, a, 1.0, false);
  if (best < near_tol * near_tol) {
    angle = std::fabs(std::atan2(den, rx * sx + ry * sy));
    return true;
  }
  return false;
}

} // namespace detail

/// Earliest transversal planar self-crossing via an incremental spatial
/// hash over the polyline segments; strands closer than `separation` in
/// arclength are treated as one (no trivial consecutive-segment hits).
inline std::optional<IntersectionEvent> self_intersection(
    const GeodesicTrace& tr, double separation = 0.5,
    double near_tol = 1e-6) {
  const auto& S = tr.samples;
  if (S.size() < 3) return std::nullopt;

  std::vector<detail::Seg> segs;
  segs.reserve(S.size() - 1);
  double cell = 0.25;
  for (size_t i = 0; i + 1 < S.size(); ++i) {
    const double x0 = S[i].pos.r * std::cos(S[i].pos.theta);
    const double y0 = S[i].pos.r * std::sin(S[i].pos.theta);
    const double x1 = S[i + 1].pos.r * std::cos(S[i + 1].pos.theta);
    const double y1 = S[i + 1].pos.r * std::sin(S[i + 1].pos.theta);
    segs.push_back({x0, y0, x1, y1, S[i].s, S[i + 1].s});
    cell = std::max(cell, std::hypot(x1 - x0, y1 - y0));
  }

  std::unordered_map<long long, std::vector<int>> hash;
  auto key = [&](int ix, int iy) {
    return (static_cast<long long>(ix) << 32) ^
           (static_cast<long long>(iy) & 0xffffffffLL);
  };
  auto cells_of = [&](const detail::Seg& s, auto&& fn) {
    const int x0 = static_cast<int>(std::floor(std::min(s.x0, s.x1) / cell));
    const int x1 = static_cast<int>(std::floor(std::max(s.x0, s.x1) / cell));
    const int y0 = static_cast<int>(std::floor(std::min(s.y0, s.y1) / cell));
    const int y1 = static_cast<int>(std::floor(std::max(s.y0, s.y1) / cell));
    for (int ix = x0; ix <= x1; ++ix)
      for (int iy = y0; iy <= y1; ++iy) fn(key(ix, iy));
  };

  std::vector<int> candidates;
  for (int j = 0; j < static_cast<int>(segs.size()); ++j) {
    const auto& b = segs[j];
    candidates.clear();
    cells_of(b, [&](long long k) {
      auto it = hash.find(k);
      if (it != hash.end())
        candidates.insert(candidates.end(), it->second.begin(),
                          it->second.end());
    });
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
    std::optional<IntersectionEvent> best;
    for (int i : candidates) {
      const auto& a = segs[i];
      if (b.s0 - a.s1 < separation) continue;
      double ta, tb, ang;
      if (detail::seg_intersect(a, b, near_tol, ta, tb, ang)) {
        IntersectionEvent ev;
        ev.s1 = a.s0 + ta * (a.s1 - a.s0);
        ev.s2 = b.s0 + tb * (b.s1 - b.s0);
        ev.x = a.x0 + ta * (a.x1 - a.x0);
        ev.y = a.y0 + ta * (a.y1 - a.y0);
        ev.angle = ang;
        if (!best || ev.s2 < best->s2) best = ev;
      }
    }
    if (best) return best;
    cells_of(b, [&](long long k) { hash[k].push_back(j); });
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// The census: classify every launch azimuth as both-ends-radial or
// self-intersecting and count the surviving injective lines.

struct CensusEntry {
  double theta = 0.0;
  bool radial = false;       // both-ends-radial candidate line
  double deviation = 0.0;    // outward exit angle to the radial direction
  double theta_plus = 0.0;
  bool intersects = false;
  double s1 = 0.0, s2 = 0.0; // first self-intersection arclengths
  bool undetermined = false;
  std::string error;
};

struct CensusReport {
  std::vector<CensusEntry> entries;
  std::vector<double> marked;  // both-ends-radial azimuths, sorted
  double threshold = 0.0;      // radial/deflected separation threshold
  int count = 0;               // injective line count = marked / 2
  bool degenerate = false;     // every azimuth radial (unperturbed metric)
  bool ok = false;             // dichotomy held at every azimuth
};

inline CensusReport injective_census(const MetricField* field,
                                     const ProfileFunction& f,
                                     const DeflectionSpec& spec, int n_theta,
                                     double horizon = 6.0 * kPi + 16.0,
                                     const TraceOptions& trace_opts = {},
                                     double threshold_floor = 1e-6,
                                     double separation = 0.5) {
  if (n_theta < 4 || n_theta % 4 != 0)
    throw std::invalid_argument(
        "injective_census: n_theta must be a positive multiple of 4");

  auto run_one = [&](double theta, CensusEntry& e, double threshold) {
    e.theta = wrap_angle(theta);
    GeodesicState start;
    start.pos = PolarPoint::make(trace_opts.escape_radius, theta);
    start.v_r = -1.0;
    try {
      const auto tr = trace(field, f, start, horizon, trace_opts);
      const auto rr = analyze_return(tr, theta);
      if (!rr.ok) {
        e.undetermined = true;
        e.error = rr.error;
        return;
      }
      e.deviation = rr.deviation;
      e.theta_plus = rr.theta_plus;
      if (e.deviation >= threshold) {
        // only deflected candidates need the self-crossing search
        if (const auto ev = self_intersection(tr, separation)) {
          e.intersects = true;
          e.s1 = ev->s1;
          e.s2 = ev->s2;
        }
      }
    } catch (const std::exception& ex) {
      e.undetermined = true;
      e.error = ex.what();
    }
  };

  CensusReport rep;
  rep.entries.resize(n_theta);

  // self-calibrating threshold from the forced-radial control at theta = 0
  CensusEntry control;
  run_one(0.0, control, std::numeric_limits<double>::infinity());
  if (control.undetermined)
    throw std::runtime_error("injective_census: control trace failed: " +
                             control.error);
  rep.threshold = std::max(10.0 * control.deviation, threshold_floor);

  std::atomic<int> next{0};
  const unsigned n_workers =
      std::max(1u, std::thread::hardware_concurrency());
  auto work = [&] {
    for (int j = next.fetch_add(1); j < n_theta; j = next.fetch_add(1))
      run_one(kTwoPi * j / n_theta, rep.entries[j], rep.threshold);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  bool all_ok = true;
  for (auto& e : rep.entries) {
    if (e.undetermined) {
      all_ok = false;
      continue;
    }
    e.radial = e.deviation < rep.threshold;
    if (e.radial) {
      rep.marked.push_back(e.theta);
    } else if (!e.intersects) {
      e.undetermined = true;
      e.error = "neither radial nor self-intersecting within horizon";
      all_ok = false;
    }
  }
  std::sort(rep.marked.begin(), rep.marked.end());
  rep.degenerate = static_cast<int>(rep.marked.size()) == n_theta;
  rep.count = static_cast<int>(rep.marked.size()) / 2;
  rep.ok = all_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Gauss-Bonnet checksum over the disk {r <= R}.

namespace detail {

/// Gaussian curvature of the interpolated metric via the Brioschi formula;
/// second derivatives by central differences of the analytic first partials.
inline double grid_curvature(const MetricField& field, double r, double theta,
                             double h) {
  const auto c = field.eval(r, theta);
  const auto cr_m = field.eval(r - h, theta);
  const auto cr_p = field.eval(r + h, theta);
  const auto ct_m = field.eval(r, wrap_angle(theta - h));
  const auto ct_p = field.eval(r, wrap_angle(theta + h));
  const double E = c.rr, F = c.rt, G = c.tt;
  const double Eu = c.rr_r, Ev = c.rr_t;
  const double Fu = c.rt_r, Fv = c.rt_t;
  const double Gu = c.tt_r, Gv = c.tt_t;
  const double Evv = (ct_p.rr_t - ct_m.rr_t) / (2.0 * h);
  const double Guu = (cr_p.tt_r - cr_m.tt_r) / (2.0 * h);
  const double Fuv = (ct_p.rt_r - ct_m.rt_r) / (2.0 * h);
  auto det3 = [](double a00, double a01, double a02, double a10, double a11,
                 double a12, double a20, double a21, double a22) {
    return a00 * (a11 * a22 - a12 * a21) - a01 * (a10 * a22 - a12 * a20) +
           a02 * (a10 * a21 - a11 * a20);
  };
  const double m1 =
      det3(-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,
           Fv - 0.5 * Gu, E, F, 0.5 * Gv, F, G);
  const double m2 = det3(0.0, 0.5 * Ev, 0.5 * Gu, 0.5 * Ev, E, F, 0.5 * Gu,
                         F, G);
  const double det = E * G - F * F;
  return (m1 - m2) / (det * det);
}

} // namespace detail

/// Total curvature of the disk {r <= R} plus the boundary turning:
/// integral of K dA over the disk + integral of kappa_g ds over the circle.
/// Closed forms in the rotationally symmetric regions, Brioschi quadrature
/// of the interpolated metric across the band when a field is given.
inline double gauss_bonnet_disk(const MetricField* field,
                                const ProfileFunction& f, double R,
                                int n_quad = 200) {
  if (!(R > 0.0)) throw std::invalid_argument("gauss_bonnet_disk: R <= 0");
  if (n_quad < 8) throw std::invalid_argument("gauss_bonnet_disk: n_quad");
  double total = 0.0;

  // cap portion: integral of K dA over r <= min(R, R0) = 2 pi (1 - f'(a))
  const double a = std::min(R, kR0);
  total += kTwoPi * (1.0 - std::cos(a));

  // band portion
  if (R > kR0) {
    const double b = std::min(R, kR1);
    if (field) {
      const int nr = n_quad + (n_quad % 2);            // Simpson needs even
      const int nt = 2 * n_quad;                       // periodic trapezoid
      const double hr = (b - kR0) / nr;
      const double ht = kTwoPi / nt;
      const double h_fd = std::max(1e-3, hr);
      double sum = 0.0;
      for (int i = 0; i <= nr; ++i) {
        const double r = kR0 + i * hr;
        const double rr = std::min(std::max(r, kR0 + h_fd), kR1 - h_fd);
        const double wr = (i == 0 || i == nr) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        double ring = 0.0;
        for (int j = 0; j < nt; ++j) {
          const double th = j * ht;
          const double K = detail::grid_curvature(*field, rr, th, h_fd);
          const auto m = field->eval(rr, th);
          ring += K * std::sqrt(m.rr * m.tt - m.rt * m.rt);
        }
        sum += wr * ring * ht;
      }
      total += sum * hr / 3.0;
    } else {
      total += -kTwoPi * (f.eval(b, 1) - f.eval(kR0, 1));
    }
  }

  // outer portion
  if (R > kR1) total += -kTwoPi * (f.eval(R, 1) - f.eval(kR1, 1));

  // boundary turning
  if (!field || R <= kR0 + 1e-12 || R >= kR1 - 1e-12) {
    total += kTwoPi * f.eval(R, 1);
  } else {
    // kappa_g ds = -sqrt(det) Gamma^r_tt / g_tt dtheta on the circle r = R
    const int nt = 2 * n_quad;
    const double ht = kTwoPi / nt;
    double sum = 0.0;
    for (int j = 0; j < nt; ++j) {
      const double th = j * ht;
      const auto m = field->eval(R, th);
      const auto g = field->christoffel(R, th);
      sum += -std::sqrt(m.rr * m.tt - m.rt * m.rt) * g.r_tt / m.tt;
    }
    total += sum * ht;
  }
  return total;
}

} // namespace geoscat
