#include "pslab/types.hpp"

#include <cmath>

namespace pslab {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ok: return "ok";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::boundary_mass: return "boundary mass";
    case ErrorCode::wrap_around: return "wrap-around";
    case ErrorCode::out_of_domain: return "out of domain";
    case ErrorCode::coverage: return "coverage";
    case ErrorCode::alias_violation: return "alias violation";
    case ErrorCode::boundary_leakage: return "boundary leakage";
    case ErrorCode::grid_mismatch: return "grid mismatch";
    case ErrorCode::cfl_violation: return "CFL violation";
    case ErrorCode::negative_undershoot: return "negative undershoot";
    case ErrorCode::invariant_violation: return "invariant violation";
    case ErrorCode::denominator_underflow: return "denominator underflow";
    case ErrorCode::quadrature_divergence: return "quadrature divergence";
    case ErrorCode::insufficient_sampling: return "insufficient sampling";
    case ErrorCode::step_overflow: return "step overflow";
    case ErrorCode::config_error: return "config error";
    case ErrorCode::io_error: return "io error";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

PositionGrid::PositionGrid(double x_min, double x_max, std::size_t n)
    : x_min_(x_min), x_max_(x_max), n_(n) {
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
    fail(ErrorCode::invalid_argument, "grid needs finite x_max > x_min");
  if (!is_power_of_two(n) || n < 4)
    fail(ErrorCode::invalid_argument, "grid size must be a power of two >= 4");
}

double PositionGrid::wavenumber(std::size_t j) const {
  long n = static_cast<long>(n_);
  long s = static_cast<long>(j) < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - n;
  return 2.0 * kPi * static_cast<double>(s) / length();
}

RVector PositionGrid::nodes() const {
  RVector v(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) v(static_cast<Eigen::Index>(i)) = x(i);
  return v;
}

double WaveFunction::norm() const { return std::sqrt(values.squaredNorm() * grid.dx()); }

cplx inner(const WaveFunction& f, const WaveFunction& g) {
  if (!(f.grid == g.grid)) fail(ErrorCode::grid_mismatch, "inner product on different grids");
  return g.values.dot(f.values) * f.grid.dx();
}

PhaseGrid::PhaseGrid(double x_min, double x_max, double xi_min, double xi_max, std::size_t nx,
                     std::size_t nxi)
    : x_min_(x_min), x_max_(x_max), xi_min_(xi_min), xi_max_(xi_max), nx_(nx), nxi_(nxi) {
  if (!(x_max > x_min) || !(xi_max > xi_min))
    fail(ErrorCode::invalid_argument, "phase grid needs positive extents");
  if (nx < 2 || nxi < 2) fail(ErrorCode::invalid_argument, "phase grid needs >= 2 nodes per axis");
}

double PhaseGrid::xi_extent() const {
  return std::max(std::abs(xi_min_), std::abs(xi(nxi_ - 1)));
}

void check_alias_guard(const PhaseGrid& pg, const PositionGrid& grid, double h) {
  double limit = kAliasFraction * grid.xi_nyquist(h);
  if (pg.xi_extent() > limit * (1.0 + 1e-12))
    fail(ErrorCode::alias_violation, "|xi| up to " + std::to_string(pg.xi_extent()) +
                                         " exceeds 0.7*xi_nyq = " + std::to_string(limit));
}

PhaseDistribution to_distribution(const Symbol& s) {
  PhaseDistribution d(s.pg);
  d.values = s.values.real();
  return d;
}

Symbol to_symbol(const PhaseDistribution& d) {
  Symbol s(d.pg);
  s.values = d.values.cast<cplx>();
  return s;
}

}  // namespace pslab
