#include "pslab/wick_calculus.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/fft.hpp"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"

namespace pslab {

cplx bi_wick_eval(const QuantumOperator& A, PhasePoint X, PhasePoint Y) {
  const double h = A.h;
  if (norm2(X - Y) / (4.0 * h) > std::log(1e300))
    fail(ErrorCode::denominator_underflow, "coherent overlap underflows at this separation");
  WaveFunction px = coherent_state(X, h, A.grid);
  WaveFunction py = coherent_state(Y, h, A.grid);
  return inner(apply(A, px), py) / coherent_overlap(X, Y, h);
}

namespace {

double frame_ratio(const CMatrix& v) {
  double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  const Eigen::Index r = v.rows(), c = v.cols();
  double f = std::max({v.row(0).cwiseAbs().maxCoeff(), v.row(r - 1).cwiseAbs().maxCoeff(),
                       v.col(0).cwiseAbs().maxCoeff(), v.col(c - 1).cwiseAbs().maxCoeff()});
  return f / m;
}

bool use_spectral(const Symbol& F, DerivativeMethod method) {
  if (method == DerivativeMethod::stencil) return false;
  bool decays = frame_ratio(F.values) <= 1e-8;
  if (method == DerivativeMethod::spectral && !decays)
    fail(ErrorCode::boundary_leakage, "spectral derivative of a symbol that does not decay on its grid");
  return decays;
}

// signed wavenumber of bin j on n nodes of spacing d; Nyquist flagged
double wavenumber(long j, long n, double d, bool& nyquist) {
  long s = fft::signed_index(j, n);
  nyquist = (n % 2 == 0) && s == -n / 2;
  return 2.0 * kPi * static_cast<double>(s) / (static_cast<double>(n) * d);
}

template <class Mult>
Symbol spectral_apply(const Symbol& F, Mult&& mult) {
  const long nx = static_cast<long>(F.pg.nx()), nxi = static_cast<long>(F.pg.nxi());
  CMatrix m = F.values;
  fft::forward_2d(m);
  for (long j = 0; j < nxi; ++j) {
    bool ny_xi;
    double kxi = wavenumber(j, nxi, F.pg.dxi(), ny_xi);
    for (long i = 0; i < nx; ++i) {
      bool ny_x;
      double kx = wavenumber(i, nx, F.pg.dx(), ny_x);
      m(i, j) *= mult(kx, kxi, ny_x, ny_xi);
    }
  }
  fft::backward_2d(m);
  Symbol out(F.pg, F.h_tag);
  out.values = m / (static_cast<double>(nx) * static_cast<double>(nxi));
  return out;
}

// fourth-order first derivative along one axis, one-sided near the ends
void stencil_derivative(const cplx* in, cplx* out, long n, long stride, double d) {
  auto f = [&](long i) { return in[i * stride]; };
  const double c = 1.0 / (12.0 * d);
  for (long i = 0; i < n; ++i) {
    cplx v;
    if (i >= 2 && i + 2 < n) {
      v = f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2);
    } else if (i == 0) {
      v = -25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4);
    } else if (i == 1) {
      v = -3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4);
    } else if (i == n - 2) {
      v = 3.0 * f(n - 1) + 10.0 * f(n - 2) - 18.0 * f(n - 3) + 6.0 * f(n - 4) - f(n - 5);
    } else {
      v = 25.0 * f(n - 1) - 48.0 * f(n - 2) + 36.0 * f(n - 3) - 16.0 * f(n - 4) + 3.0 * f(n - 5);
    }
    out[i * stride] = c * v;
  }
}

CMatrix stencil_dx(const CMatrix& v, double d) {
  CMatrix out(v.rows(), v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) stencil_derivative(&v(0, j), &out(0, j), v.rows(), 1, d);
  return out;
}

CMatrix stencil_dxi(const CMatrix& v, double d) {
  CMatrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) stencil_derivative(&v(i, 0), &out(i, 0), v.cols(), v.rows(), d);
  return out;
}

void check_stencil_size(const PhaseGrid& pg) {
  if (pg.nx() < 5 || pg.nxi() < 5) fail(ErrorCode::grid_mismatch, "stencil derivatives need at least 5 nodes per axis");
}

}  // namespace

Symbol partial_derivative(const Symbol& F, int ox, int oxi, DerivativeMethod method) {
  if (ox < 0 || oxi < 0) fail(ErrorCode::invalid_argument, "derivative orders must be nonnegative");
  if (ox == 0 && oxi == 0) return F;
  if (use_spectral(F, method)) {
    return spectral_apply(F, [&](double kx, double kxi, bool nx, bool nxi) -> cplx {
      if ((ox > 0 && nx) || (oxi > 0 && nxi)) return 0.0;
      return std::pow(cplx(0.0, kx), ox) * std::pow(cplx(0.0, kxi), oxi);
    });
  }
  check_stencil_size(F.pg);
  Symbol out = F;
  for (int k = 0; k < ox; ++k) out.values = stencil_dx(out.values, F.pg.dx());
  for (int k = 0; k < oxi; ++k) out.values = stencil_dxi(out.values, F.pg.dxi());
  return out;
}

Symbol wirtinger(const Symbol& F, int alpha, bool conjugate, DerivativeMethod method) {
  if (alpha < 0) fail(ErrorCode::invalid_argument, "Wirtinger order must be nonnegative");
  if (alpha == 0) return F;
  const double s = conjugate ? 1.0 : -1.0;
  if (use_spectral(F, method)) {
    return spectral_apply(F, [&](double kx, double kxi, bool nx, bool nxi) -> cplx {
      if (nx || nxi) return 0.0;
      // (d_x + s i d_xi)/2 -> (i kx - s kxi)/2
      return std::pow(0.5 * cplx(-s * kxi, kx), alpha);
    });
  }
  check_stencil_size(F.pg);
  Symbol out = F;
  for (int k = 0; k < alpha; ++k)
    out.values = 0.5 * (stencil_dx(out.values, F.pg.dx()) + cplx(0.0, s) * stencil_dxi(out.values, F.pg.dxi()));
  return out;
}

Symbol wick_expand(const Symbol& sa, const Symbol& sb, int m, double h) {
  if (m < 1) fail(ErrorCode::invalid_argument, "expansion order m must be at least 1");
  if (!(sa.pg == sb.pg)) fail(ErrorCode::grid_mismatch, "symbols live on different phase grids");
  Symbol out(sa.pg, h);
  double coef = 1.0;
  for (int k = 0; k < m; ++k) {
    if (k > 0) coef *= 2.0 * h / k;
    out.values += coef * wirtinger(sa, k, false).values.cwiseProduct(wirtinger(sb, k, true).values);
  }
  return out;
}

Symbol wick_compose_expand(const QuantumOperator& A, const QuantumOperator& B, int m, const PhaseGrid& pg) {
  return wick_expand(wick_symbol_direct(A, pg), wick_symbol_direct(B, pg), m, A.h);
}

std::vector<int> remainder_orders(int m) {
  std::vector<int> out;
  for (int k = m; k <= std::max(m, 2); ++k) out.push_back(k);
  return out;
}

CompositionRemainder composition_remainder(const Symbol& F, const QuantumOperator& B, int m, const PhaseGrid& pg) {
  QuantumOperator A = weyl_quantize(F, B.grid, B.h);
  const double h = B.h;
  CompositionRemainder r;
  Symbol exact = wick_symbol_direct(compose(A, B), pg);
  r.R = exact;
  r.R.values -= wick_compose_expand(A, B, m, pg).values;
  r.l1 = r.R.values.cwiseAbs().sum() * pg.cell_area() / (2.0 * kPi * h);
  double s = 0.0;
  for (int k : remainder_orders(m)) s += std::pow(h, 0.5 * k) * wirtinger(F, k, false).linf();
  r.bound_rhs = trace_norm(B) * s;
  return r;
}

namespace {

void check_uniform(const std::vector<MeanFieldState>& traj) {
  if (traj.size() < 3) fail(ErrorCode::insufficient_sampling, "centred differences need at least three states");
  double dt = traj[1].t - traj[0].t;
  if (!(dt > 0.0)) fail(ErrorCode::insufficient_sampling, "states must be ordered in time");
  for (std::size_t k = 1; k < traj.size(); ++k)
    if (std::abs(traj[k].t - traj[k - 1].t - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      fail(ErrorCode::insufficient_sampling, "states are not uniformly spaced in time");
}

Symbol husimi_symbol(const MeanFieldState& s, const PhaseGrid& pg) { return to_symbol(husimi_density(s, pg)); }

Symbol transport_lhs(const Symbol& prev, const Symbol& cur, const Symbol& next, double dt, double h) {
  const PhaseGrid& pg = cur.pg;
  Symbol out(pg, h);
  out.values = (next.values - prev.values) / (2.0 * dt);
  Symbol ux = partial_derivative(cur, 1, 0, DerivativeMethod::spectral);
  Symbol uxxi = partial_derivative(cur, 1, 1, DerivativeMethod::spectral);
  for (std::size_t j = 0; j < pg.nxi(); ++j)
    out.values.col(static_cast<Eigen::Index>(j)) += 2.0 * pg.xi(j) * ux.values.col(static_cast<Eigen::Index>(j));
  out.values += h * uxxi.values;
  return out;
}

}  // namespace

PdeResidual pde_residual(const std::vector<MeanFieldState>& traj, const PhaseGrid& pg) {
  check_uniform(traj);
  const double dt = traj[1].t - traj[0].t;
  const double h = traj.front().h;
  std::vector<Symbol> u;
  u.reserve(traj.size());
  for (const auto& s : traj) u.push_back(husimi_symbol(s, pg));
  PdeResidual r;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    r.times.push_back(traj[k].t);
    r.lhs.push_back(transport_lhs(u[k - 1], u[k], u[k + 1], dt, h));
    QuantumOperator rho = traj[k].density();
    PotentialField vq = mean_field_Vq(rho, traj[k].pot);
    // [V_q, rho] has kernel (V_i - V_j) K_ij
    CMatrix c = rho.kernel;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) *= vq.values(i) - vq.values(j);
    Symbol rhs = wick_symbol_direct(QuantumOperator{rho.grid, h, c, false}, pg);
    rhs.values /= cplx(0.0, h) * (2.0 * kPi * h);
    r.rhs.push_back(rhs);
    Symbol res = r.lhs.back();
    res.values -= rhs.values;
    r.residual.push_back(res);
  }
  return r;
}

std::vector<Symbol> wick_truncation_residual(const std::vector<MeanFieldState>& traj, const PhaseGrid& pg, int m) {
  if (m < 2 || m > 5) fail(ErrorCode::invalid_argument, "truncation order m must lie in [2, 5]");
  check_uniform(traj);
  const double dt = traj[1].t - traj[0].t;
  const double h = traj.front().h;
  std::vector<Symbol> u;
  for (const auto& s : traj) u.push_back(husimi_symbol(s, pg));
  std::vector<Symbol> out;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    Symbol res = transport_lhs(u[k - 1], u[k], u[k + 1], dt, h);
    PotentialSpec smoothed{heat_smoothed(traj[k].pot.V, h), traj[k].pot.W};
    MeanField phi(to_distribution(u[k]), smoothed);
    double coef = 1.0;
    for (int a = 1; a < m; ++a) {
      coef *= h / a;
      Symbol d = wirtinger(u[k], a, false, DerivativeMethod::spectral);
      Symbol db = wirtinger(u[k], a, true, DerivativeMethod::spectral);
      for (std::size_t i = 0; i < pg.nx(); ++i) {
        double p = phi.derivative(pg.x(i), a);
        auto row = static_cast<Eigen::Index>(i);
        // (1/ih) h^a/a! Phi^(a) (dbar^a u - d^a u)
        res.values.row(row) -= (coef * p / cplx(0.0, h)) * (db.values.row(row) - d.values.row(row));
      }
    }
    out.push_back(res);
  }
  return out;
}

}  // namespace pslab
