#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "pslab/types.hpp"

namespace pslab::interp {

// Four-point Lagrange weights for nodes -1, 0, 1, 2 at fractional offset t.
inline std::array<double, 4> cubic_weights(double t) {
  return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
          -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

// Stencil for coordinate u on nodes x0 + k*d.  Returns base index i0 (node
// k = i0 + m carries weight w[m]) with t in [0,1).
struct Stencil {
  long i0;
  std::array<double, 4> w;
};

inline Stencil stencil(double u, double x0, double d) {
  double s = (u - x0) / d;
  double fl = std::floor(s);
  double t = s - fl;
  // snap onto nodes so exact node evaluations reproduce samples
  if (t < 1e-12) t = 0.0;
  if (t > 1.0 - 1e-12) {
    t = 0.0;
    fl += 1.0;
  }
  return {static_cast<long>(fl) - 1, cubic_weights(t)};
}

// Interpolate a column-major sample vector at u; nodes outside [0, n) read as zero
// unless periodic.
template <class Vec>
auto eval_1d(const Vec& v, long n, double x0, double d, double u, bool periodic) {
  using T = std::decay_t<decltype(v[0])>;
  Stencil st = stencil(u, x0, d);
  T acc = T(0);
  for (int m = 0; m < 4; ++m) {
    long k = st.i0 + m;
    if (periodic) {
      k %= n;
      if (k < 0) k += n;
    } else if (k < 0 || k >= n) {
      continue;
    }
    if (st.w[m] != 0.0) acc += st.w[m] * v[k];
  }
  return acc;
}

// Cubic B-spline basis weights for nodes -1, 0, 1, 2 at offset t.
inline std::array<double, 4> bspline_weights(double t) {
  double u = 1.0 - t;
  return {u * u * u / 6.0, (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0,
          (3.0 * u * u * u - 6.0 * u * u + 4.0) / 6.0, t * t * t / 6.0};
}

// In place: samples -> cubic B-spline coefficients along a strided line, with
// zero coefficients beyond both ends.  Thomas sweep on (1/6, 2/3, 1/6).
template <class T>
void bspline_prefilter(T* v, long n, long stride, std::vector<double>& scratch) {
  scratch.resize(static_cast<std::size_t>(n));
  const double a = 1.0 / 6.0, b = 2.0 / 3.0;
  double denom = b;
  scratch[0] = a / denom;
  v[0] /= denom;
  for (long i = 1; i < n; ++i) {
    denom = b - a * scratch[static_cast<std::size_t>(i - 1)];
    scratch[static_cast<std::size_t>(i)] = a / denom;
    v[i * stride] = (v[i * stride] - a * v[(i - 1) * stride]) / denom;
  }
  for (long i = n - 2; i >= 0; --i) v[i * stride] -= scratch[static_cast<std::size_t>(i)] * v[(i + 1) * stride];
}

}  // namespace pslab::interp
