#pragma once

#include <cmath>

#include "pslab/quadrature.hpp"

namespace pslab {

template <class F>
double ball_mass(F&& f, double R, int nr, int ntheta) {
  // Gauss-Legendre in r on dyadic shells, trapezoid in theta
  double total = 0.0;
  auto gl = gauss_legendre(nr / 8 > 8 ? nr / 8 : 8);
  double r0 = 0.0;
  double r1 = std::min(R, 1.0);
  while (r0 < R) {
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      double r = 0.5 * (r1 - r0) * gl.nodes[k] + 0.5 * (r1 + r0);
      double wr = 0.5 * (r1 - r0) * gl.weights[k];
      double ring = 0.0;
      for (int t = 0; t < ntheta; ++t) {
        double th = 2.0 * kPi * t / ntheta;
        ring += std::abs(f(r * std::cos(th), r * std::sin(th)));
      }
      total += wr * r * ring * (2.0 * kPi / ntheta);
    }
    r0 = r1;
    r1 = std::min(R, 2.0 * r1);
  }
  return total;
}

}  // namespace pslab
