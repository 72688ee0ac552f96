#include "pslab/classical_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/interp.hpp"

namespace pslab {

namespace {

constexpr long kPad = 8;  // extra gradient-table nodes beyond each x edge

// d^n/du^n e^{-u^2} = (-1)^n H_n(u) e^{-u^2}
double hermite_phys(int n, double u) {
  switch (n) {
    case 0: return 1.0;
    case 1: return 2.0 * u;
    case 2: return 4.0 * u * u - 2.0;
    case 3: return 8.0 * u * u * u - 12.0 * u;
    default: return 16.0 * u * u * u * u - 48.0 * u * u + 12.0;
  }
}

}  // namespace

double Potential::derivative(double x, int order) const {
  if (order < 0 || order > 4) fail(ErrorCode::invalid_argument, "potential derivatives go up to order 4");
  switch (kind) {
    case PotentialKind::zero:
      return order == 0 ? offset : 0.0;
    case PotentialKind::harmonic:
      if (order == 0) return amp * x * x + offset;
      if (order == 1) return 2.0 * amp * x;
      if (order == 2) return 2.0 * amp;
      return 0.0;
    case PotentialKind::cosine:
      return amp * std::pow(scale, order) * std::cos(scale * x + 0.5 * kPi * order) + (order == 0 ? offset : 0.0);
    case PotentialKind::gaussian: {
      double u = x / scale;
      double sign = (order % 2) ? -1.0 : 1.0;
      return amp * sign * hermite_phys(order, u) * std::exp(-u * u) / std::pow(scale, order) +
             (order == 0 ? offset : 0.0);
    }
  }
  return 0.0;
}

Potential potential_from_name(const std::string& name, double amp, double scale) {
  Potential p;
  p.amp = amp;
  p.scale = scale;
  if (name == "zero") {
    p.kind = PotentialKind::zero;
  } else if (name == "harmonic") {
    p.kind = PotentialKind::harmonic;
  } else if (name == "cosine") {
    p.kind = PotentialKind::cosine;
  } else if (name == "gaussian" || name == "gaussian_W") {
    p.kind = PotentialKind::gaussian;
  } else {
    fail(ErrorCode::config_error, "unknown potential preset '" + name + "'");
  }
  if ((p.kind == PotentialKind::cosine || p.kind == PotentialKind::gaussian) && !(scale > 0.0))
    fail(ErrorCode::config_error, "potential scale must be positive");
  return p;
}

std::string potential_name(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::harmonic: return "harmonic";
    case PotentialKind::cosine: return "cosine";
    case PotentialKind::gaussian: return "gaussian";
  }
  return "zero";
}

Potential heat_smoothed(const Potential& V, double s) {
  if (!(s >= 0.0)) fail(ErrorCode::invalid_argument, "smoothing time must be nonnegative");
  Potential out = V;
  switch (V.kind) {
    case PotentialKind::zero:
      break;
    case PotentialKind::harmonic:
      // e^{(s/4) D^2} x^2 = x^2 + s/2
      out.offset += 0.5 * s * V.amp;
      break;
    case PotentialKind::cosine:
      out.amp = V.amp * std::exp(-0.25 * s * V.scale * V.scale);
      break;
    case PotentialKind::gaussian: {
      double w2 = V.scale * V.scale + s;
      out.amp = V.amp * V.scale / std::sqrt(w2);
      out.scale = std::sqrt(w2);
      break;
    }
  }
  return out;
}

double hamiltonian(PhasePoint X, const Potential& V) { return X.xi * X.xi + V(X.x); }

PhasePoint hamiltonian_flow(PhasePoint X0, double t, const Potential& V, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "flow step must be positive");
  double ratio = std::abs(t) / dt;
  if (!(ratio <= 1e6)) fail(ErrorCode::step_overflow, "flow needs more than 1e6 steps");
  long n = static_cast<long>(std::ceil(ratio - 1e-9));
  if (n == 0) return X0;
  double s = t / static_cast<double>(n);
  double q = X0.x, p = X0.xi;
  double f = V.derivative(q, 1);
  for (long k = 0; k < n; ++k) {
    p -= 0.5 * s * f;
    q += 2.0 * s * p;
    f = V.derivative(q, 1);
    p -= 0.5 * s * f;
  }
  return {q, p};
}

RVector x_marginal(const PhaseDistribution& v) { return v.values.rowwise().sum() * v.pg.dxi(); }

MeanField::MeanField(const PhaseDistribution& v, const PotentialSpec& pot)
    : MeanField(x_marginal(v), v.pg, pot) {}

MeanField::MeanField(const RVector& marginal, const PhaseGrid& pg, const PotentialSpec& pot)
    : marginal_(marginal), pg_(pg), pot_(pot) {
  if (marginal_.size() != static_cast<Eigen::Index>(pg.nx()))
    fail(ErrorCode::grid_mismatch, "marginal does not match the phase grid");
}

double MeanField::eval(double x, int order) const {
  double acc = 0.0;
  if (!pot_.W.is_zero()) {
    for (Eigen::Index i = 0; i < marginal_.size(); ++i)
      acc += pot_.W.derivative(x - pg_.x(static_cast<std::size_t>(i)), order) * marginal_(i);
    acc *= pg_.dx();
  }
  return pot_.V.derivative(x, order) + acc;
}

RVector mean_field_Vcl(const PhaseDistribution& v, const PotentialSpec& pot) {
  MeanField f(v, pot);
  RVector out(static_cast<Eigen::Index>(v.pg.nx()));
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = f.value(v.pg.x(static_cast<std::size_t>(i)));
  return out;
}

double default_vlasov_dt(const PhaseGrid& pg) {
  double xi = std::max(pg.xi_extent(), 1e-12);
  return std::min(pg.dx() / (2.0 * xi), 1e-2);
}

namespace {

// gradient of V_cl on the x nodes padded by kPad on each side
struct GradientTable {
  double x0, dx;
  RVector g;
  const MeanField* field;
  double operator()(double x) const {
    double s = (x - x0) / dx;
    if (s < 1.0 || s > static_cast<double>(g.size()) - 3.0) return field->gradient(x);
    return interp::eval_1d(g, g.size(), x0, dx, x, false);
  }
};

GradientTable gradient_table(const PhaseGrid& pg, const MeanField& field) {
  GradientTable t{pg.x_min() - kPad * pg.dx(), pg.dx(), RVector(static_cast<Eigen::Index>(pg.nx()) + 2 * kPad),
                  &field};
  for (Eigen::Index i = 0; i < t.g.size(); ++i) t.g(i) = field.gradient(t.x0 + static_cast<double>(i) * t.dx);
  return t;
}

PhasePoint foot(PhasePoint X, double dt, const GradientTable& grad) {
  double p = X.xi + 0.5 * dt * grad(X.x);
  double q = X.x - 2.0 * dt * p;
  p += 0.5 * dt * grad(q);
  return {q, p};
}

PhaseDistribution transport(const PhaseDistribution& v, double dt, const GradientTable& grad) {
  const PhaseGrid& pg = v.pg;
  const long nx = static_cast<long>(pg.nx()), nxi = static_cast<long>(pg.nxi());
  // cubic B-spline coefficients of v, zero outside the grid
  RMatrix c = v.values;
  std::vector<double> scratch;
  for (long j = 0; j < nxi; ++j) interp::bspline_prefilter(&c(0, j), nx, 1, scratch);
  for (long i = 0; i < nx; ++i) interp::bspline_prefilter(&c(i, 0), nxi, nx, scratch);
  PhaseDistribution out(pg);
  for (long j = 0; j < nxi; ++j) {
    for (long i = 0; i < nx; ++i) {
      PhasePoint f = foot({pg.x(static_cast<std::size_t>(i)), pg.xi(static_cast<std::size_t>(j))}, dt, grad);
      double sx = (f.x - pg.x_min()) / pg.dx(), sy = (f.xi - pg.xi_min()) / pg.dxi();
      double fx = std::floor(sx), fy = std::floor(sy);
      auto wx = interp::bspline_weights(sx - fx);
      auto wy = interp::bspline_weights(sy - fy);
      long i0 = static_cast<long>(fx) - 1, j0 = static_cast<long>(fy) - 1;
      double acc = 0.0;
      for (int b = 0; b < 4; ++b) {
        long jj = j0 + b;
        if (jj < 0 || jj >= nxi) continue;
        double col = 0.0;
        for (int a = 0; a < 4; ++a) {
          long ii = i0 + a;
          if (ii < 0 || ii >= nx) continue;
          col += wx[a] * c(ii, jj);
        }
        acc += wy[b] * col;
      }
      out.values(i, j) = acc;
    }
  }
  return out;
}

void check_cfl(const PhaseGrid& pg, double dt, const GradientTable& grad) {
  const double slack = 1.0 + 1e-9;
  if (2.0 * pg.xi_extent() * std::abs(dt) > pg.dx() * slack)
    fail(ErrorCode::cfl_violation, "2 max|xi| dt exceeds dx");
  double gmax = grad.g.segment(kPad, static_cast<Eigen::Index>(pg.nx())).cwiseAbs().maxCoeff();
  if (gmax * std::abs(dt) > pg.dxi() * slack)
    fail(ErrorCode::cfl_violation, "max|dV_cl/dx| dt exceeds dxi");
}

void check_undershoot(const PhaseDistribution& v) {
  double vmax = v.values.maxCoeff();
  double vmin = v.values.minCoeff();
  if (vmin < -1e-6 * std::max(vmax, 0.0))
    fail(ErrorCode::negative_undershoot, "distribution undershoots below -1e-6 of its maximum");
}

}  // namespace

PhasePoint vlasov_foot(PhasePoint X, double dt, const MeanField& field) {
  GradientTable exact{0.0, 1.0, RVector(), &field};
  return foot(X, dt, exact);
}

PhaseDistribution vlasov_transport(const PhaseDistribution& v, double dt, const MeanField& field) {
  GradientTable grad = gradient_table(v.pg, field);
  check_cfl(v.pg, dt, grad);
  return transport(v, dt, grad);
}

PhaseDistribution vlasov_step(const PhaseDistribution& v, double dt, const PotentialSpec& pot) {
  MeanField f0(v, pot);
  GradientTable g0 = gradient_table(v.pg, f0);
  check_cfl(v.pg, dt, g0);
  PhaseDistribution out;
  if (pot.W.is_zero()) {
    // the field does not depend on v
    out = transport(v, dt, g0);
  } else {
    PhaseDistribution half = transport(v, 0.5 * dt, g0);
    MeanField f1(half, pot);
    GradientTable g1 = gradient_table(v.pg, f1);
    check_cfl(v.pg, dt, g1);
    out = transport(v, dt, g1);
  }
  check_undershoot(out);
  return out;
}

double l1_distance(const Symbol& a, const Symbol& b) {
  if (!(a.pg == b.pg)) fail(ErrorCode::grid_mismatch, "symbols live on different phase grids");
  return (a.values - b.values).cwiseAbs().sum() * a.pg.cell_area();
}

double l1_distance(const PhaseDistribution& a, const PhaseDistribution& b) {
  if (!(a.pg == b.pg)) fail(ErrorCode::grid_mismatch, "distributions live on different phase grids");
  return (a.values - b.values).cwiseAbs().sum() * a.pg.cell_area();
}

}  // namespace pslab
