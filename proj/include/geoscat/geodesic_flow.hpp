#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoscat/constants.hpp"
#include "geoscat/metric_grid.hpp"
#include "geoscat/polar.hpp"
#include "geoscat/profile.hpp"
#include "geoscat/sphere.hpp"

namespace geoscat {

enum class Region { Cap, Band, Outer };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Cap: return "cap";
    case Region::Band: return "band";
    default: return "outer";
  }
}

struct GeodesicState {
  PolarPoint pos;
  double v_r = 0.0;
  double v_theta = 0.0;
  Region region = Region::Band;
  double s = 0.0;
};

struct TraceEvent {
  std::string type; // cap_entry, cap_exit, cross_R1_in, cross_R1_out,
                    // turning_point, escape, truncated
  double s = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double crossing_angle = 0.0; // angle of velocity to d_r at the event
};

struct GeodesicTrace {
  std::vector<GeodesicState> samples;
  std::vector<TraceEvent> events;
  bool truncated = false;
  std::string error;
};

struct TraceOptions {
  double atol = 1e-11;
  double rtol = 1e-11;
  double max_step = 0.1;     // arclength between recorded samples
  double max_dtheta = 0.2;   // azimuth advance between recorded samples...
  double min_step = 1e-3;    // ...but never force steps below this floor;
                             // deep-tail winding (dtheta/ds ~ 1/I) would
                             // otherwise demand unbounded sample counts
  int cap_samples = 64;      // interior samples per cap transit
  double escape_radius = 8.0;
  bool stop_at_escape = false;
  std::size_t max_samples = 2000000; // hard budget; exceeding it truncates
};

namespace detail {

/// Geodesic equation right-hand side for y = (r, theta, v_r, v_theta).
/// The grid field is used inside the band when available; everywhere else
/// the rotationally symmetric closed forms apply.
struct GeodesicRhs {
  const MetricField* field = nullptr;
  const ProfileFunction* f = nullptr;

  void operator()(const double y[4], double dy[4]) const {
    dy[0] = y[2];
    dy[1] = y[3];
    const double r = y[0];
    if (field && r >= kR0 && r <= kR1) {
      const auto g = field->christoffel(r, y[1]);
      dy[2] = -(g.r_rr * y[2] * y[2] + 2.0 * g.r_rt * y[2] * y[3] +
                g.r_tt * y[3] * y[3]);
      dy[3] = -(g.t_rr * y[2] * y[2] + 2.0 * g.t_rt * y[2] * y[3] +
                g.t_tt * y[3] * y[3]);
    } else {
      const double fr = f->eval(r, 0), fp = f->eval(r, 1);
      dy[2] = fr * fp * y[3] * y[3];
      dy[3] = -2.0 * (fp / fr) * y[2] * y[3];
    }
  }
};

inline thread_local double last_err = 0.0;

/// One Dormand-Prince 5(4) step with Hairer's quartic dense output.
struct Dopri5Step {
  double y0[4], y1[4];
  double rcont[5][4];
  double h = 0.0;

  /// dense evaluation at fraction u in [0, 1]
  void eval(double u, double out[4]) const {
    const double u1 = 1.0 - u;
    for (int i = 0; i < 4; ++i)
      out[i] = rcont[0][i] +
               u * (rcont[1][i] +
                    u1 * (rcont[2][i] + u * (rcont[3][i] + u1 * rcont[4][i])));
  }
};

inline bool dopri5_try(const GeodesicRhs& rhs, const double y[4],
                       const double k1[4], double h, Dopri5Step& st,
                       double k7[4], double atol, double rtol) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
  double k2[4], k3[4], k4[4], k5[4], k6[4], t[4];
  for (int i = 0; i < 4; ++i) t[i] = y[i] + h * a21 * k1[i];
  rhs(t, k2);
  for (int i = 0; i < 4; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  rhs(t, k3);
  for (int i = 0; i < 4; ++i)
    t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs(t, k4);
  for (int i = 0; i < 4; ++i)
    t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  rhs(t, k5);
  for (int i = 0; i < 4; ++i)
    t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                       a65 * k5[i]);
  rhs(t, k6);
  for (int i = 0; i < 4; ++i)
    st.y1[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                           b6 * k6[i]);
  rhs(st.y1, k7);

  double err = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k7[i]);
    const double sc = atol + rtol * std::max(std::fabs(y[i]),
                                             std::fabs(st.y1[i]));
    err += (ei / sc) * (ei / sc);
  }
  err = std::sqrt(err / 4.0);

  st.h = h;
  for (int i = 0; i < 4; ++i) {
    st.y0[i] = y[i];
    const double ydiff = st.y1[i] - y[i];
    const double bspl = h * k1[i] - ydiff;
    st.rcont[0][i] = y[i];
    st.rcont[1][i] = ydiff;
    st.rcont[2][i] = bspl;
    st.rcont[3][i] = ydiff - h * k7[i] - bspl;
    st.rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                          d6 * k6[i] + d7 * k7[i]);
  }
  last_err = err;
  return err <= 1.0;
}

/// Root of fn(dense(u)) = 0 in (0, 1], assuming a sign change over the
/// step; returns the earliest bracketed root refined by bisection.
template <typename Fn>
double dense_root(const Dopri5Step& st, Fn fn, double lo, double hi) {
  double tmp[4];
  st.eval(lo, tmp);
  double flo = fn(tmp);
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    st.eval(mid, tmp);
    const double fm = fn(tmp);
    if ((flo < 0) == (fm < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return hi;
}

} // namespace detail

/// Hybrid geodesic tracer. Numeric adaptive integration in the band
/// (interpolated metric) and in the outer region (closed-form rotational
/// symmetry); the cap r <= R0 is never integrated: transits are exact half
/// great circles spliced in with interior samples.
inline GeodesicTrace trace(const MetricField* field, const ProfileFunction& f,
                           GeodesicState start, double s_max,
                           const TraceOptions& opts = {}) {
  GeodesicTrace out;
  if (!(s_max > 0.0)) throw std::invalid_argument("trace: s_max <= 0");
  if (start.pos.r < kR0 - 1e-9)
    throw std::invalid_argument("trace: start inside the cap unsupported");

  detail::GeodesicRhs rhs{field, &f};
  double y[4] = {start.pos.r, start.pos.theta, start.v_r, start.v_theta};
  double s = start.s;
  const double s_end = start.s + s_max;
  auto region_of = [](double r) {
    return r > kR1 ? Region::Outer : Region::Band;
  };
  Region region = region_of(y[0]);

  auto push_sample = [&](double ss, const double yy[4], Region reg) {
    out.samples.push_back(
        {PolarPoint::make(yy[0], yy[1]), yy[2], yy[3], reg, ss});
  };
  auto crossing_angle = [&](const double yy[4]) {
    return std::atan2(f.eval(yy[0], 0) * yy[3], yy[2]);
  };
  push_sample(s, y, region);

  double k1[4], k7[4];
  rhs(y, k1);
  double h = 1e-4;
  bool escaped_noted = false;

  while (s < s_end - 1e-13) {
    // cap transit: splice exactly when sitting on the inner rim inbound
    if (std::fabs(y[0] - kR0) < 1e-9 && y[2] < -1e-7) {
      out.events.push_back({"cap_entry", s, kR0, wrap_angle(y[1]),
                            crossing_angle(y)});
      const auto t = cap_transit(PolarPoint::make(kR0, y[1]), y[2], y[3]);
      for (int i = 1; i <= opts.cap_samples; ++i) {
        const double sc = kPi * i / (opts.cap_samples + 1);
        Vec3 X, T;
        great_circle_state(t.X0, t.T0, sc, X, T);
        GeodesicState gs;
        gs.region = Region::Cap;
        gs.s = s + sc;
        sphere_to_polar(X, T, gs.pos, gs.v_r, gs.v_theta);
        out.samples.push_back(gs);
        if (gs.s >= s_end) break;
      }
      s += kPi;
      y[0] = t.exit.r;
      y[1] = t.exit.theta;
      y[2] = t.exit_v_r;
      y[3] = t.exit_v_theta;
      region = Region::Band;
      out.events.push_back({"cap_exit", s, kR0, wrap_angle(y[1]),
                            crossing_angle(y)});
      if (s >= s_end - 1e-13) break;
      push_sample(s, y, region);
      rhs(y, k1);
      h = 1e-4;
      continue;
    }

    // step size limits: sampling density and the end of the integration
    double h_lim = opts.max_step;
    if (std::fabs(y[3]) > 1e-12)
      h_lim = std::min(h_lim, std::max(opts.min_step,
                                       opts.max_dtheta / std::fabs(y[3])));
    h_lim = std::min(h_lim, s_end - s);
    h = std::min(h, h_lim);
    if (out.samples.size() >= opts.max_samples) {
      out.truncated = true;
      out.error = "sample budget exceeded";
      out.events.push_back({"truncated", s, y[0], wrap_angle(y[1]), 0.0});
      break;
    }
    if (h < 1e-14) {
      out.truncated = true;
      out.error = "step size underflow";
      out.events.push_back({"truncated", s, y[0], wrap_angle(y[1]), 0.0});
      break;
    }

    detail::Dopri5Step st;
    if (!detail::dopri5_try(rhs, y, k1, h, st, k7, opts.atol, opts.rtol)) {
      h *= std::max(0.2, 0.9 * std::pow(detail::last_err, -0.2));
      continue;
    }
    const double h_next =
        h * std::min(5.0, std::max(0.2, 0.9 * std::pow(
                                            std::max(detail::last_err, 1e-10),
                                            -0.2)));

    // boundary and turning events inside the accepted step
    double u_cut = 1.0;
    std::string ev;
    auto consider = [&](double u, const std::string& name) {
      if (u < u_cut) {
        u_cut = u;
        ev = name;
      }
    };
    const double r0 = st.y0[0], r1 = st.y1[0];
    if (region == Region::Band) {
      if ((r0 - kR0) > 0 && (r1 - kR0) < 0)
        consider(detail::dense_root(
                     st, [](const double* yy) { return yy[0] - kR0; }, 0.0,
                     1.0),
                 "hit_R0");
      if ((r0 - kR1) < 0 && (r1 - kR1) > 0)
        consider(detail::dense_root(
                     st, [](const double* yy) { return yy[0] - kR1; }, 0.0,
                     1.0),
                 "cross_R1_out");
    } else {
      if ((r0 - kR1) > 0 && (r1 - kR1) < 0)
        consider(detail::dense_root(
                     st, [](const double* yy) { return yy[0] - kR1; }, 0.0,
                     1.0),
                 "cross_R1_in");
    }
    if (st.y0[2] != 0.0 && (st.y0[2] < 0) != (st.y1[2] < 0))
      consider(detail::dense_root(
                   st, [](const double* yy) { return yy[2]; }, 0.0, 1.0),
               "turning_point");

    if (u_cut < 1.0) {
      st.eval(u_cut, y);
      s += u_cut * st.h;
      if (ev == "hit_R0") {
        y[0] = kR0; // snapped; the cap branch above takes over next round
        if (y[2] >= -1e-7) {
          // tangential graze: nudge outward and continue in the band
          y[2] = std::max(y[2], 0.0);
        }
        push_sample(s, y, Region::Band);
      } else if (ev == "cross_R1_out" || ev == "cross_R1_in") {
        y[0] = kR1;
        region = ev == "cross_R1_out" ? Region::Outer : Region::Band;
        out.events.push_back({ev, s, kR1, wrap_angle(y[1]),
                              crossing_angle(y)});
        push_sample(s, y, region);
      } else { // turning point
        out.events.push_back(
            {"turning_point", s, y[0], wrap_angle(y[1]), crossing_angle(y)});
        push_sample(s, y, region);
      }
      rhs(y, k1);
      h = std::max(h_next, 1e-6);
      continue;
    }

    for (int i = 0; i < 4; ++i) y[i] = st.y1[i];
    for (int i = 0; i < 4; ++i) k1[i] = k7[i]; // FSAL
    s += st.h;
    push_sample(s, y, region);
    if (!escaped_noted && region == Region::Outer &&
        y[0] > opts.escape_radius) {
      escaped_noted = true;
      out.events.push_back({"escape", s, y[0], wrap_angle(y[1]),
                            crossing_angle(y)});
      if (opts.stop_at_escape) break;
    }
    h = h_next;
  }
  return out;
}

/// Maximum Clairaut drift over maximal sub-arcs that stay where the metric
/// is exactly rotationally symmetric (outside the band, in the cap, or in
/// the dead half-annulus of the band).
struct ClairautDrift {
  double max_drift = 0.0;
  int arcs = 0;
};

inline ClairautDrift clairaut_monitor(const GeodesicTrace& trace,
                                      const ProfileFunction& f) {
  ClairautDrift rep;
  auto symmetric = [&](const GeodesicState& g) {
    if (g.region == Region::Cap) return true;
    if (g.pos.r > kR1 + 1e-9 || g.region == Region::Outer) return true;
    const double th = wrap_angle(g.pos.theta);
    return th >= kPi + 1e-3 && th <= kTwoPi - 1e-3;
  };
  size_t i = 0;
  const auto& S = trace.samples;
  while (i < S.size()) {
    while (i < S.size() && !symmetric(S[i])) ++i;
    if (i >= S.size()) break;
    size_t j = i;
    double I0 = 0.0;
    bool first = true;
    while (j < S.size() && symmetric(S[j])) {
      const double r = S[j].pos.r;
      if (r > 1e-6) {
        const double fr = f.eval(r, 0);
        const double I = fr * fr * S[j].v_theta;
        if (first) {
          I0 = I;
          first = false;
        } else {
          rep.max_drift = std::max(rep.max_drift, std::fabs(I - I0));
        }
      }
      ++j;
    }
    if (!first) ++rep.arcs;
    i = j;
  }
  return rep;
}

enum class GeodesicClass {
  Proper,
  Bounded,
  BoundedWithTurningPoints,
  Undetermined
};

inline const char* class_name(GeodesicClass c) {
  switch (c) {
    case GeodesicClass::Proper: return "proper";
    case GeodesicClass::Bounded: return "bounded";
    case GeodesicClass::BoundedWithTurningPoints:
      return "bounded_with_turning_points";
    default: return "undetermined";
  }
}

/// Finite-horizon classification from the trace signature.
inline GeodesicClass classify(const GeodesicTrace& trace,
                              const ProfileFunction& f,
                              double escape_radius = 8.0) {
  if (trace.samples.size() < 2 || trace.truncated)
    return GeodesicClass::Undetermined;
  double r_max = 0.0, r_min = 1e300;
  for (const auto& g : trace.samples) {
    r_max = std::max(r_max, g.pos.r);
    r_min = std::min(r_min, g.pos.r);
  }
  const auto& last = trace.samples.back();
  if (last.pos.r > escape_radius) {
    const double fr = f.eval(last.pos.r, 0);
    const double I = fr * fr * last.v_theta;
    if (std::fabs(I) < 1e-6 && last.v_r > 0.0) return GeodesicClass::Proper;
    return GeodesicClass::Undetermined;
  }
  int turns = 0;
  for (const auto& e : trace.events)
    if (e.type == "turning_point") ++turns;
  if (turns >= 2) return GeodesicClass::BoundedWithTurningPoints;
  if (r_max - r_min < 1e-6) return GeodesicClass::Bounded;
  return GeodesicClass::Undetermined;
}

/// CSV export: s, r, theta, v_r, v_theta, region, I (printf %.17g for
/// byte-stable round trips).
inline void trace_to_csv(const GeodesicTrace& trace, const ProfileFunction& f,
                         const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("trace_to_csv: cannot open " + path);
  std::fputs("s,r,theta,v_r,v_theta,region,I\n", fp);
  for (const auto& g : trace.samples) {
    const double fr = g.pos.r > 1e-12 ? f.eval(g.pos.r, 0) : 0.0;
    std::fprintf(fp, "%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n", g.s, g.pos.r,
                 g.pos.theta, g.v_r, g.v_theta, region_name(g.region),
                 fr * fr * g.v_theta);
  }
  std::fclose(fp);
}

inline void events_to_json(const GeodesicTrace& trace,
                           const std::string& path) {
  nlohmann::json j;
  j["truncated"] = trace.truncated;
  j["error"] = trace.error;
  j["events"] = nlohmann::json::array();
  for (const auto& e : trace.events)
    j["events"].push_back({{"type", e.type},
                           {"s", e.s},
                           {"r", e.r},
                           {"theta", e.theta},
                           {"crossing_angle", e.crossing_angle}});
  std::ofstream out(path);
  if (!out) throw std::runtime_error("events_to_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

} // namespace geoscat
