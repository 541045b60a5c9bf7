#pragma once

#include "geoscat/constants.hpp"

namespace geoscat {

/// Point in polar coordinates. r = 0 is the pole; theta is stored reduced
/// to [0, 2*pi).
struct PolarPoint {
  double r = 0.0;
  double theta = 0.0;

  static PolarPoint make(double r, double theta) {
    return {r, r == 0.0 ? 0.0 : wrap_angle(theta)};
  }
};

/// Tangent vector v = v_r * d_r + v_theta * d_theta at a base point.
struct TangentVector {
  PolarPoint base;
  double v_r = 0.0;
  double v_theta = 0.0;
};

} // namespace geoscat
