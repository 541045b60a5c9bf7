#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "geoscat/constants.hpp"
#include "geoscat/profile.hpp"
#include "geoscat/spline.hpp"

namespace geoscat {

/// Sampled components of the perturbed metric over the band
/// [R0, R1] x [0, 2 pi): g_rr, g_rtheta, g_thetatheta on a uniform grid,
/// periodic in theta. Row-major storage, index i * n_theta + j with i the
/// radial index.
struct MetricGrid {
  int n_r = 0;
  int n_theta = 0;
  double r0 = kR0;
  double r1 = kR1;
  double epsilon = 0.0;
  double amplitude = 1.0;
  double delta = kDefaultDelta;
  std::vector<double> g_rr, g_rt, g_tt;

  double dr() const { return (r1 - r0) / (n_r - 1); }
  double dtheta() const { return kTwoPi / n_theta; }
  size_t idx(int i, int j) const {
    return static_cast<size_t>(i) * n_theta + j;
  }
};

/// Tensor-product cubic Hermite surface on the band grid: nodal values plus
/// spline-derived partials give a C^1 interpolant with analytic first
/// derivatives (enough for Christoffel symbols).
class HermiteSurface {
 public:
  HermiteSurface() = default;

  HermiteSurface(int n_r, int n_theta, double r0, double r1,
                 std::vector<double> v)
      : n_r_(n_r), n_theta_(n_theta), r0_(r0),
        dr_((r1 - r0) / (n_r - 1)), dth_(kTwoPi / n_theta),
        v_(std::move(v)) {
    const size_t n = v_.size();
    vr_.assign(n, 0.0);
    vt_.assign(n, 0.0);
    vrt_.assign(n, 0.0);
    // theta derivatives: periodic spline per radius row
    for (int i = 0; i < n_r_; ++i) {
      std::vector<double> row(v_.begin() + (size_t)i * n_theta_,
                              v_.begin() + (size_t)(i + 1) * n_theta_);
      PeriodicSpline sp(kTwoPi, row);
      for (int j = 0; j < n_theta_; ++j)
        vt_[(size_t)i * n_theta_ + j] = sp.deriv(dth_ * j);
    }
    // r derivatives: not-a-knot spline per theta column
    std::vector<double> rad(n_r_), col(n_r_);
    for (int i = 0; i < n_r_; ++i) rad[i] = r0_ + dr_ * i;
    for (int j = 0; j < n_theta_; ++j) {
      for (int i = 0; i < n_r_; ++i) col[i] = v_[(size_t)i * n_theta_ + j];
      CubicSpline sp(rad, col);
      for (int i = 0; i < n_r_; ++i)
        vr_[(size_t)i * n_theta_ + j] = sp.deriv(rad[i]);
    }
    // cross derivative: theta-spline of the r-derivative field
    for (int i = 0; i < n_r_; ++i) {
      std::vector<double> row(vr_.begin() + (size_t)i * n_theta_,
                              vr_.begin() + (size_t)(i + 1) * n_theta_);
      PeriodicSpline sp(kTwoPi, row);
      for (int j = 0; j < n_theta_; ++j)
        vrt_[(size_t)i * n_theta_ + j] = sp.deriv(dth_ * j);
    }
  }

  /// Value and first partials at (r, theta).
  void eval(double r, double theta, double& val, double& d_r,
            double& d_t) const {
    double xr = (r - r0_) / dr_;
    int i = std::min(n_r_ - 2, std::max(0, (int)std::floor(xr)));
    const double u = xr - i;
    double t = wrap_angle(theta) / dth_;
    int j = std::min(n_theta_ - 1, std::max(0, (int)std::floor(t)));
    const double w = t - j;
    const int jn = (j + 1) % n_theta_;

    auto H = [](double x, double* h, double* hd) {
      const double x2 = x * x, x3 = x2 * x;
      h[0] = 2 * x3 - 3 * x2 + 1; h[1] = x3 - 2 * x2 + x;
      h[2] = -2 * x3 + 3 * x2;    h[3] = x3 - x2;
      hd[0] = 6 * x2 - 6 * x;     hd[1] = 3 * x2 - 4 * x + 1;
      hd[2] = -6 * x2 + 6 * x;    hd[3] = 3 * x2 - 2 * x;
    };
    double hu[4], hud[4], hw[4], hwd[4];
    H(u, hu, hud);
    H(w, hw, hwd);

    // corner data, derivatives scaled to cell units
    auto corner = [&](int ii, int jj, double* c) {
      const size_t k = (size_t)ii * n_theta_ + jj;
      c[0] = v_[k];
      c[1] = vr_[k] * dr_;
      c[2] = vt_[k] * dth_;
      c[3] = vrt_[k] * dr_ * dth_;
    };
    double c00[4], c10[4], c01[4], c11[4];
    corner(i, j, c00);
    corner(i + 1, j, c10);
    corner(i, jn, c01);
    corner(i + 1, jn, c11);

    // bicubic Hermite tensor product
    auto mix = [&](const double* hu_, const double* hw_) {
      return hu_[0] * (hw_[0] * c00[0] + hw_[2] * c01[0] + hw_[1] * c00[2] + hw_[3] * c01[2]) +
             hu_[2] * (hw_[0] * c10[0] + hw_[2] * c11[0] + hw_[1] * c10[2] + hw_[3] * c11[2]) +
             hu_[1] * (hw_[0] * c00[1] + hw_[2] * c01[1] + hw_[1] * c00[3] + hw_[3] * c01[3]) +
             hu_[3] * (hw_[0] * c10[1] + hw_[2] * c11[1] + hw_[1] * c10[3] + hw_[3] * c11[3]);
    };
    val = mix(hu, hw);
    d_r = mix(hud, hw) / dr_;
    d_t = mix(hu, hwd) / dth_;
  }

 private:
  int n_r_ = 0, n_theta_ = 0;
  double r0_ = 0.0, dr_ = 1.0, dth_ = 1.0;
  std::vector<double> v_, vr_, vt_, vrt_;
};

/// Interpolated metric over the band with Christoffel evaluation.
class MetricField {
 public:
  MetricField() = default;

  explicit MetricField(const MetricGrid& G)
      : r0_(G.r0), r1_(G.r1),
        frr_(G.n_r, G.n_theta, G.r0, G.r1, G.g_rr),
        frt_(G.n_r, G.n_theta, G.r0, G.r1, G.g_rt),
        ftt_(G.n_r, G.n_theta, G.r0, G.r1, G.g_tt) {}

  double r_min() const { return r0_; }
  double r_max() const { return r1_; }

  struct Components {
    double rr, rt, tt;         // metric
    double rr_r, rt_r, tt_r;   // d/dr
    double rr_t, rt_t, tt_t;   // d/dtheta
  };

  Components eval(double r, double theta) const {
    Components c{};
    frr_.eval(r, theta, c.rr, c.rr_r, c.rr_t);
    frt_.eval(r, theta, c.rt, c.rt_r, c.rt_t);
    ftt_.eval(r, theta, c.tt, c.tt_r, c.tt_t);
    return c;
  }

  /// Christoffel symbols Gamma^k_{ij} in (r, theta) coordinates.
  struct Gamma {
    double r_rr, r_rt, r_tt;
    double t_rr, t_rt, t_tt;
  };

  Gamma christoffel(double r, double theta) const {
    const Components c = eval(r, theta);
    const double det = c.rr * c.tt - c.rt * c.rt;
    const double i_rr = c.tt / det, i_rt = -c.rt / det, i_tt = c.rr / det;
    // first-kind symbols [ij,l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    const double rr_r = 0.5 * c.rr_r;
    const double rr_t = c.rt_r - 0.5 * c.rr_t;
    const double rt_r = 0.5 * c.rr_t;
    const double rt_t = 0.5 * c.tt_r;
    const double tt_r = c.rt_t - 0.5 * c.tt_r;
    const double tt_t = 0.5 * c.tt_t;
    Gamma g{};
    g.r_rr = i_rr * rr_r + i_rt * rr_t;
    g.r_rt = i_rr * rt_r + i_rt * rt_t;
    g.r_tt = i_rr * tt_r + i_rt * tt_t;
    g.t_rr = i_rt * rr_r + i_tt * rr_t;
    g.t_rt = i_rt * rt_r + i_tt * rt_t;
    g.t_tt = i_rt * tt_r + i_tt * tt_t;
    return g;
  }

 private:
  double r0_ = kR0, r1_ = kR1;
  HermiteSurface frr_, frt_, ftt_;
};

// ---------------------------------------------------------------------------
// Binary grid file: magic, version, dims, metadata, row-major component
// arrays as little-endian 64-bit floats, crc32 trailer over everything
// after the magic.
// ---------------------------------------------------------------------------

namespace detail {
static_assert(std::endian::native == std::endian::little,
              "grid file I/O assumes a little-endian host");

inline constexpr char kGridMagic[8] = {'G', 'S', 'C', 'A', 'T', 'G', 'R', 'D'};
inline constexpr std::uint32_t kGridVersion = 1;

template <typename T>
void put(std::string& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

template <typename T>
T get(const std::string& buf, size_t& off) {
  if (off + sizeof(T) > buf.size())
    throw std::runtime_error("grid file: truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}
} // namespace detail

inline void export_grid(const MetricGrid& G, const std::string& path) {
  std::string payload;
  detail::put(payload, detail::kGridVersion);
  detail::put(payload, static_cast<std::uint32_t>(G.n_r));
  detail::put(payload, static_cast<std::uint32_t>(G.n_theta));
  for (double d : {G.r0, G.r1, G.epsilon, G.amplitude, G.delta})
    detail::put(payload, d);
  for (const auto* arr : {&G.g_rr, &G.g_rt, &G.g_tt})
    payload.append(reinterpret_cast<const char*>(arr->data()),
                   arr->size() * sizeof(double));
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("export_grid: cannot open " + path);
  out.write(detail::kGridMagic, sizeof(detail::kGridMagic));
  out.write(payload.data(), payload.size());
  detail::put(payload, crc); // reuse serializer for the trailer bytes
  out.write(payload.data() + payload.size() - sizeof(crc), sizeof(crc));
  if (!out) throw std::runtime_error("export_grid: write failed");
}

inline MetricGrid import_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("import_grid: cannot open " + path);
  std::string all((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (all.size() < sizeof(detail::kGridMagic) + sizeof(std::uint32_t) ||
      std::memcmp(all.data(), detail::kGridMagic,
                  sizeof(detail::kGridMagic)) != 0)
    throw std::runtime_error("import_grid: malformed header");
  const std::string payload = all.substr(
      sizeof(detail::kGridMagic),
      all.size() - sizeof(detail::kGridMagic) - sizeof(std::uint32_t));
  size_t off = all.size() - sizeof(std::uint32_t);
  const std::uint32_t stored_crc = detail::get<std::uint32_t>(all, off);
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  if (crc != stored_crc)
    throw std::runtime_error("import_grid: checksum mismatch");

  off = 0;
  const auto version = detail::get<std::uint32_t>(payload, off);
  if (version != detail::kGridVersion)
    throw std::runtime_error("import_grid: unsupported format version");
  MetricGrid G;
  G.n_r = static_cast<int>(detail::get<std::uint32_t>(payload, off));
  G.n_theta = static_cast<int>(detail::get<std::uint32_t>(payload, off));
  G.r0 = detail::get<double>(payload, off);
  G.r1 = detail::get<double>(payload, off);
  G.epsilon = detail::get<double>(payload, off);
  G.amplitude = detail::get<double>(payload, off);
  G.delta = detail::get<double>(payload, off);
  const size_t n = static_cast<size_t>(G.n_r) * G.n_theta;
  if (payload.size() - off != 3 * n * sizeof(double))
    throw std::runtime_error("grid file: truncated");
  for (auto* arr : {&G.g_rr, &G.g_rt, &G.g_tt}) {
    arr->resize(n);
    std::memcpy(arr->data(), payload.data() + off, n * sizeof(double));
    off += n * sizeof(double);
  }
  return G;
}

} // namespace geoscat
