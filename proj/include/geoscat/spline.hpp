#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace geoscat {

namespace detail {

// Thomas algorithm, overwrites rhs with the solution.
inline void solve_tridiagonal(std::vector<double>& lower,
                              std::vector<double>& diag,
                              std::vector<double>& upper,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

} // namespace detail

/// Cubic spline with not-a-knot end conditions on a strictly increasing
/// knot vector. Provides value, first/second derivative, and the exact
/// piecewise-cubic antiderivative.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 4 || y_.size() != n)
      throw std::invalid_argument("CubicSpline: need >= 4 matching knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i]))
        throw std::invalid_argument("CubicSpline: knots not increasing");

    // Solve for interior second derivatives M_1..M_{n-2}; the not-a-knot
    // conditions express M_0 and M_{n-1} through their neighbors.
    const std::size_t m = n - 2;
    std::vector<double> lo(m, 0.0), di(m, 0.0), up(m, 0.0), rhs(m, 0.0);
    auto h = [&](std::size_t i) { return x_[i + 1] - x_[i]; };
    auto slope = [&](std::size_t i) { return (y_[i + 1] - y_[i]) / h(i); };
    for (std::size_t i = 1; i + 1 < n; ++i) {
      lo[i - 1] = h(i - 1) / 6.0;
      di[i - 1] = (h(i - 1) + h(i)) / 3.0;
      up[i - 1] = h(i) / 6.0;
      rhs[i - 1] = slope(i) - slope(i - 1);
    }
    // M_0 = (1 + h0/h1) M_1 - (h0/h1) M_2
    {
      const double r = h(0) / h(1);
      di[0] += lo[0] * (1.0 + r);
      up[0] += lo[0] * (-r);
      lo[0] = 0.0;
    }
    // M_{n-1} = (1 + h_{n-2}/h_{n-3}) M_{n-2} - (h_{n-2}/h_{n-3}) M_{n-3}
    {
      const double r = h(n - 2) / h(n - 3);
      di[m - 1] += up[m - 1] * (1.0 + r);
      lo[m - 1] += up[m - 1] * (-r);
      up[m - 1] = 0.0;
    }
    detail::solve_tridiagonal(lo, di, up, rhs);

    m2_.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) m2_[i + 1] = rhs[i];
    m2_[0] = (1.0 + h(0) / h(1)) * m2_[1] - (h(0) / h(1)) * m2_[2];
    m2_[n - 1] = (1.0 + h(n - 2) / h(n - 3)) * m2_[n - 2] -
                 (h(n - 2) / h(n - 3)) * m2_[n - 3];

    // cumulative integral at knots
    cum_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double hi = h(i);
      cum_[i + 1] = cum_[i] + 0.5 * hi * (y_[i] + y_[i + 1]) -
                    hi * hi * hi * (m2_[i] + m2_[i + 1]) / 24.0;
    }
  }

  double operator()(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[i + 1]) *
               (h * h) / 6.0;
  }

  double deriv(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * b * b - 1.0) * m2_[i + 1] - (3.0 * a * a - 1.0) * m2_[i]) *
               h / 6.0;
  }

  double deriv2(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * m2_[i] + b * m2_[i + 1];
  }

  /// Exact integral of the spline over [a, b] within the knot range.
  double integral(double a, double b) const {
    if (b < a) return -integral(b, a);
    return antiderivative(b) - antiderivative(a);
  }

  /// Integral from the first knot to x.
  double antiderivative(double x) const {
    const std::size_t i = locate(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    // integral of the local cubic from x_i to x
    const double part =
        h * (0.5 * (1.0 - a * a) * y_[i] + 0.5 * b * b * y_[i + 1]) +
        h * h * h / 6.0 *
            (-(0.25 * a * a * a * a - 0.5 * a * a + 0.25) * m2_[i] +
             (0.25 * b * b * b * b - 0.5 * b * b) * m2_[i + 1]);
    return cum_[i] + part;
  }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t locate(double x) const {
    // clamped extrapolation index (evaluation outside the range uses the
    // boundary cubic)
    const std::size_t n = x_.size();
    if (x <= x_[1]) return 0;
    if (x >= x_[n - 2]) return n - 2;
    std::size_t lo = 1, hi = n - 2;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }

  std::vector<double> x_, y_, m2_, cum_;
};

/// Cubic spline of a periodic function sampled on the uniform grid
/// x_k = k * period / n, k = 0..n-1.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;

  PeriodicSpline(double period, std::vector<double> y)
      : period_(period), y_(std::move(y)) {
    const std::size_t n = y_.size();
    if (n < 4) throw std::invalid_argument("PeriodicSpline: need >= 4 nodes");
    h_ = period_ / static_cast<double>(n);

    // cyclic tridiagonal system for second derivatives, Sherman-Morrison
    const double lo = h_ / 6.0, di = 2.0 * h_ / 3.0;
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double yp = y_[(i + 1) % n], ym = y_[(i + n - 1) % n];
      rhs[i] = (yp - 2.0 * y_[i] + ym) / h_;
    }
    const double gamma = -di;
    std::vector<double> dl(n, lo), dd(n, di), du(n, lo), u(n, 0.0);
    dd[0] -= gamma;
    dd[n - 1] -= lo * lo / gamma;
    u[0] = gamma;
    u[n - 1] = lo;
    std::vector<double> z = u, q = rhs;
    {
      std::vector<double> dl1 = dl, dd1 = dd, du1 = du;
      detail::solve_tridiagonal(dl1, dd1, du1, q);
    }
    detail::solve_tridiagonal(dl, dd, du, z);
    const double fact =
        (q[0] + lo * q[n - 1] / gamma) / (1.0 + z[0] + lo * z[n - 1] / gamma);
    m2_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m2_[i] = q[i] - fact * z[i];
  }

  double operator()(double x) const {
    std::size_t i;
    double a, b;
    locate(x, i, a, b);
    const std::size_t j = (i + 1) % y_.size();
    return a * y_[i] + b * y_[j] +
           ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[j]) * (h_ * h_) /
               6.0;
  }

  double deriv(double x) const {
    std::size_t i;
    double a, b;
    locate(x, i, a, b);
    const std::size_t j = (i + 1) % y_.size();
    return (y_[j] - y_[i]) / h_ +
           ((3.0 * b * b - 1.0) * m2_[j] - (3.0 * a * a - 1.0) * m2_[i]) * h_ /
               6.0;
  }

  double period() const { return period_; }
  const std::vector<double>& values() const { return y_; }

 private:
  void locate(double x, std::size_t& i, double& a, double& b) const {
    const std::size_t n = y_.size();
    double t = std::fmod(x, period_);
    if (t < 0.0) t += period_;
    double fi = std::floor(t / h_);
    if (fi >= static_cast<double>(n)) fi = static_cast<double>(n) - 1.0;
    i = static_cast<std::size_t>(fi);
    b = (t - static_cast<double>(i) * h_) / h_;
    a = 1.0 - b;
  }

  double period_ = 0.0;
  double h_ = 0.0;
  std::vector<double> y_, m2_;
};

} // namespace geoscat
