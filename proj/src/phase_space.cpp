#include "pslab/phase_space.hpp"

#include <cmath>

#include "pslab/fft.hpp"
#include "pslab/interp.hpp"

namespace pslab {
namespace {

void check_h(double h) {
  if (!(h > 0.0) || h > 1.0 || !std::isfinite(h))
    fail(ErrorCode::invalid_argument, "h must lie in (0, 1]");
}

constexpr double kSupportTol = 1e-8;

}  // namespace

double coherent_decay_radius(double h) { return std::sqrt(2.0 * h * std::log(1e12)); }

std::pair<long, long> essential_support(const CVector& v, double tol) {
  double m = v.cwiseAbs().maxCoeff();
  long lo = 1, hi = 0;
  if (m == 0.0) return {lo, hi};
  for (long i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > tol * m) {
      if (lo > hi) lo = i;
      hi = i;
    }
  return {lo, hi};
}

WaveFunction coherent_state(PhasePoint X, double h, const PositionGrid& grid) {
  check_h(h);
  double r = coherent_decay_radius(h);
  if (X.x - r < grid.x_min() || X.x + r > grid.x_max())
    fail(ErrorCode::boundary_mass, "coherent state at x = " + std::to_string(X.x) +
                                       " does not decay inside the grid");
  WaveFunction f{grid, h, CVector(static_cast<Eigen::Index>(grid.size()))};
  double c = std::pow(kPi * h, -0.25);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double u = grid.x(i);
    double d = u - X.x;
    f.values(static_cast<Eigen::Index>(i)) =
        c * std::exp(-d * d / (2.0 * h)) * std::polar(1.0, (u - 0.5 * X.x) * X.xi / h);
  }
  return f;
}

cplx coherent_overlap(PhasePoint X, PhasePoint Y, double h) {
  if (!(h > 0.0)) fail(ErrorCode::invalid_argument, "h must be positive");
  PhasePoint d = X - Y;
  return std::exp(cplx(-norm2(d) / (4.0 * h), symplectic(X, Y) / (2.0 * h)));
}

WaveFunction heisenberg_translate(PhasePoint X, double h, const WaveFunction& f) {
  check_h(h);
  const PositionGrid& g = f.grid;
  auto [lo, hi] = essential_support(f.values, kSupportTol);
  if (lo <= hi) {
    double margin = 3.0 * std::sqrt(h);
    double a = g.x(static_cast<std::size_t>(lo)) + X.x;
    double b = g.x(static_cast<std::size_t>(hi)) + X.x;
    if (a < g.x_min() + margin || b > g.x_max() - margin)
      fail(ErrorCode::wrap_around, "translated support reaches the periodic boundary");
  }
  int n = static_cast<int>(g.size());
  WaveFunction out{g, h, f.values};
  if (X.x != 0.0) {
    fft::forward(out.values.data(), n);
    for (int j = 0; j < n; ++j) {
      double k = (j == n / 2) ? 0.0 : g.wavenumber(static_cast<std::size_t>(j));
      out.values(j) *= std::polar(1.0 / n, -k * X.x);
    }
    // Nyquist bin keeps its value: shifting by a non-integer multiple of dx
    // has no unitary real interpretation there.
    fft::backward(out.values.data(), n);
  }
  if (X.xi != 0.0 || X.x != 0.0) {
    for (int i = 0; i < n; ++i)
      out.values(i) *= std::polar(1.0, (g.x(static_cast<std::size_t>(i)) - 0.5 * X.x) * X.xi / h);
  }
  return out;
}

WaveFunction symmetry_apply(PhasePoint Y, double h, const WaveFunction& f) {
  check_h(h);
  const PositionGrid& g = f.grid;
  long n = static_cast<long>(g.size());
  auto [lo, hi] = essential_support(f.values, kSupportTol);
  if (lo <= hi) {
    double a = 2.0 * Y.x - g.x(static_cast<std::size_t>(hi));
    double b = 2.0 * Y.x - g.x(static_cast<std::size_t>(lo));
    if (a < g.x_min() - 1e-12 || b > g.x(g.size() - 1) + 1e-12)
      fail(ErrorCode::out_of_domain, "reflection about y = " + std::to_string(Y.x) +
                                         " leaves the grid");
  }
  WaveFunction out{g, h, CVector::Zero(n)};
  double r = 2.0 * (Y.x - g.x_min()) / g.dx();
  double rr = std::round(r);
  bool aligned = std::abs(r - rr) < 1e-9;
  for (long i = 0; i < n; ++i) {
    double u = g.x(static_cast<std::size_t>(i));
    cplx val;
    if (aligned) {
      long j = static_cast<long>(rr) - i;
      val = (j >= 0 && j < n) ? f.values(j) : cplx(0.0);
    } else {
      val = interp::eval_1d(f.values, n, g.x_min(), g.dx(), 2.0 * Y.x - u, false);
    }
    out.values(i) = std::polar(1.0, 2.0 * (u - Y.x) * Y.xi / h) * val;
  }
  return out;
}

CMatrix coherent_transform(const WaveFunction& f, double h, const PhaseGrid& pg) {
  check_h(h);
  const PositionGrid& g = f.grid;
  long n = static_cast<long>(g.size());
  double dx = g.dx();
  double c = std::pow(kPi * h, -0.25);
  double r = coherent_decay_radius(h) * 1.6;
  CMatrix T = CMatrix::Zero(static_cast<Eigen::Index>(pg.nx()), static_cast<Eigen::Index>(pg.nxi()));
  std::vector<cplx> a;
  for (std::size_t ix = 0; ix < pg.nx(); ++ix) {
    double x = pg.x(ix);
    long i0 = std::max(0L, static_cast<long>(std::floor((x - r - g.x_min()) / dx)));
    long i1 = std::min(n - 1, static_cast<long>(std::ceil((x + r - g.x_min()) / dx)));
    if (i1 < i0) continue;
    a.assign(static_cast<std::size_t>(i1 - i0 + 1), cplx(0.0));
    for (long i = i0; i <= i1; ++i) {
      double d = g.x(static_cast<std::size_t>(i)) - x;
      a[static_cast<std::size_t>(i - i0)] = f.values(i) * (c * std::exp(-d * d / (2.0 * h)));
    }
    for (std::size_t j = 0; j < pg.nxi(); ++j) {
      double xi = pg.xi(j);
      // sum_i a_i e^{-i u_i xi/h}, u_i = u_{i0} + (i - i0) dx, by Horner in z
      cplx z = std::polar(1.0, -dx * xi / h);
      cplx acc = 0.0;
      for (long k = static_cast<long>(a.size()) - 1; k >= 0; --k) acc = acc * z + a[static_cast<std::size_t>(k)];
      double u0 = g.x(static_cast<std::size_t>(i0));
      T(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(j)) =
          dx * acc * std::polar(1.0, -(u0 - 0.5 * x) * xi / h);
    }
  }
  return T;
}

double resolution_of_identity(const WaveFunction& f, double h, const PhaseGrid& pg) {
  check_alias_guard(pg, f.grid, h);
  RMatrix hus = coherent_transform(f, h, pg).cwiseAbs2();
  double m = hus.maxCoeff();
  if (m == 0.0) return 0.0;
  long nx = hus.rows(), nxi = hus.cols();
  double frame = std::max({hus.row(0).maxCoeff(), hus.row(nx - 1).maxCoeff(),
                           hus.col(0).maxCoeff(), hus.col(nxi - 1).maxCoeff()});
  if (frame > 1e-4 * m)
    fail(ErrorCode::coverage, "Husimi density of f is not contained in the phase grid");
  return hus.sum() * pg.cell_area() / (2.0 * kPi * h);
}

}  // namespace pslab
