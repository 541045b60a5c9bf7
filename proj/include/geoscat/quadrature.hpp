#pragma once

#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace geoscat {

/// Adaptive Gauss-Kronrod quadrature of f over [a, b].
template <typename F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
  if (a == b) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, 15, tol, &error);
}

} // namespace geoscat
