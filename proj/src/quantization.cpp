#include "pslab/quantization.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "pslab/fft.hpp"
#include "pslab/interp.hpp"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"

namespace pslab {
namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * (std::abs(a) + std::abs(b) + 1.0); }

void check_h(double h) {
  if (!(h > 0.0) || h > 1.0) fail(ErrorCode::invalid_argument, "h must lie in (0, 1]");
}

long wrap(long k, long n) {
  k %= n;
  return k < 0 ? k + n : k;
}

std::vector<cplx> row_of(const CMatrix& m, Eigen::Index r) {
  std::vector<cplx> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(r, j);
  return v;
}

double frame_max(const CMatrix& v, bool rows, bool cols) {
  double e = 0.0;
  if (rows) e = std::max({e, v.row(0).cwiseAbs().maxCoeff(), v.row(v.rows() - 1).cwiseAbs().maxCoeff()});
  if (cols) e = std::max({e, v.col(0).cwiseAbs().maxCoeff(), v.col(v.cols() - 1).cwiseAbs().maxCoeff()});
  return e;
}

// Band of node indices around x where e^{-(u-x)^2/2h} exceeds 1e-16 (in pairs: 1e-32).
long band_halfwidth(double h, double dx) {
  return static_cast<long>(std::ceil(std::sqrt(2.0 * h * std::log(1e16)) / dx)) + 1;
}

}  // namespace

PhaseGrid natural_phase_grid(const PositionGrid& grid, double h) {
  check_h(h);
  double q = grid.xi_nyquist(h);
  return PhaseGrid(grid.x_min(), grid.x_max(), -q, q, grid.size(), grid.size());
}

PhaseGrid weyl_phase_grid(const PositionGrid& grid, double h) {
  check_h(h);
  double q = grid.xi_nyquist(h);
  return PhaseGrid(grid.x_min(), grid.x_max(), -q, q, 2 * grid.size(), grid.size());
}

QuantumOperator weyl_quantize(const Symbol& F, const PositionGrid& grid, double h) {
  check_h(h);
  const PhaseGrid& pg = F.pg;
  if (F.values.rows() != static_cast<Eigen::Index>(pg.nx()) ||
      F.values.cols() != static_cast<Eigen::Index>(pg.nxi()))
    fail(ErrorCode::grid_mismatch, "symbol samples do not match their phase grid");
  if (!F.values.allFinite()) fail(ErrorCode::invalid_argument, "symbol has non-finite samples");
  const long N = static_cast<long>(grid.size());
  const double L = grid.length();
  const double fmax = F.values.cwiseAbs().maxCoeff();

  const bool x_periodic = near(pg.x_min(), grid.x_min()) && near(pg.x_max(), grid.x_max());
  if (!x_periodic && frame_max(F.values, true, false) > 1e-10 * fmax)
    fail(ErrorCode::boundary_leakage, "symbol does not decay at the x edges of its phase grid");
  const double q = grid.xi_nyquist(h);
  const bool xi_periodic = near(pg.xi_min(), -q) && near(pg.xi_max(), q);
  if (!xi_periodic) {
    if (frame_max(F.values, false, true) > 1e-10 * fmax)
      fail(ErrorCode::alias_violation,
           "symbol neither decays in xi nor spans the full dual band of the grid");
    check_alias_guard(pg, grid, h);
  }

  const long nx = static_cast<long>(pg.nx());
  const long nxi = static_cast<long>(pg.nxi());
  // samples on the dual momentum lattice, FFT order
  CMatrix fxi(nx, N);
  for (long i = 0; i < nx; ++i) {
    auto row = row_of(F.values, i);
    for (long j = 0; j < N; ++j) {
      double xi = h * grid.wavenumber(static_cast<std::size_t>(j));
      fxi(i, j) = interp::eval_1d(row, nxi, pg.xi_min(), pg.dxi(), xi, xi_periodic);
    }
  }
  // midpoints m_s = x_min + s dx / 2, s mod 2N
  const long S = 2 * N;
  CMatrix G(N, S);
  for (long s = 0; s < S; ++s) {
    double m = grid.x_min() + 0.5 * static_cast<double>(s) * grid.dx();
    interp::Stencil st = interp::stencil(m, pg.x_min(), pg.dx());
    G.col(s).setZero();
    for (int k = 0; k < 4; ++k) {
      if (st.w[k] == 0.0) continue;
      long r = st.i0 + k;
      if (x_periodic) {
        r = wrap(r, nx);
      } else if (r < 0 || r >= nx) {
        continue;
      }
      G.col(s) += st.w[k] * fxi.row(r).transpose();
    }
  }
  fft::backward_columns(G);
  // pair (i, l): minimum-image separation d, midpoint index 2l + d
  CMatrix K = CMatrix::Zero(N, N);
  for (long l = 0; l < N; ++l)
    for (long i = 0; i < N; ++i) {
      long d = wrap(i - l + N / 2, N) - N / 2;
      long s = 2 * l + d;
      if (x_periodic) {
        s = wrap(s, S);
      } else if (s < 0 || s >= S) {
        continue;
      }
      K(i, l) = G(wrap(d, N), s) / L;
    }
  bool real_symbol = F.values.imag().cwiseAbs().maxCoeff() == 0.0;
  return QuantumOperator{grid, h, std::move(K), real_symbol};
}

namespace {

// kernels are read on the periodic grid; pairs across the seam use the minimum image
Symbol weyl_symbol_minimum_image(const QuantumOperator& A) {
  const PositionGrid& g = A.grid;
  const long N = static_cast<long>(g.size());
  CMatrix kh = A.kernel;
  fft::forward_2d(kh);
  const long M = 2 * N;
  CMatrix up = CMatrix::Zero(M, M);
  const long nyq = -N / 2;
  for (long q = 0; q < N; ++q) {
    long sq = fft::signed_index(q, N);
    for (long p = 0; p < N; ++p) {
      long sp = fft::signed_index(p, N);
      cplx v = kh(p, q);
      if (sp == nyq && sq == nyq) {
        // the corner bin is read as a function of x - y
        up(wrap(nyq, M), wrap(-nyq, M)) += 0.5 * v;
        up(wrap(-nyq, M), wrap(nyq, M)) += 0.5 * v;
        continue;
      }
      long ps[2] = {sp, -sp};
      long qs[2] = {sq, -sq};
      int np = sp == nyq ? 2 : 1;
      int nq = sq == nyq ? 2 : 1;
      double w = 1.0 / (np * nq);
      for (int a = 0; a < np; ++a)
        for (int b = 0; b < nq; ++b) up(wrap(ps[a], M), wrap(qs[b], M)) += w * v;
    }
  }
  fft::backward_2d(up);
  up /= static_cast<double>(N) * static_cast<double>(N);

  PhaseGrid pg = weyl_phase_grid(g, A.h);
  Symbol out(pg, A.h);
  std::vector<cplx> a(static_cast<std::size_t>(N));
  // x node i sits at half-index i/2: sample (i + m, i - m) on the doubled lattice
  for (long i = 0; i < M; ++i) {
    for (long m = -N / 2; m < N / 2; ++m)
      a[static_cast<std::size_t>(wrap(m, N))] = up(wrap(i + m, M), wrap(i - m, M));
    fft::forward(a.data(), static_cast<int>(N));
    for (long jj = 0; jj < N; ++jj)
      out.values(i, jj) = g.dx() * a[static_cast<std::size_t>(wrap(jj - N / 2, N))];
  }
  return out;
}

bool has_far_pairs(const CMatrix& K) {
  const long N = K.rows();
  const double kmax = K.cwiseAbs().maxCoeff();
  for (long l = 0; l < N; ++l)
    for (long i = 0; i < N; ++i)
      if (std::abs(i - l) >= N / 2 && std::abs(K(i, l)) > 1e-12 * kmax) return true;
  return false;
}

// Weyl symbol on the box the kernel lives in; `embedded` marks the doubled box
struct BoxSymbol {
  Symbol sym;
  bool embedded;
};

BoxSymbol weyl_symbol_box(const QuantumOperator& A, bool periodic) {
  if (periodic || !has_far_pairs(A.kernel)) return {weyl_symbol_minimum_image(A), false};
  // pairs at least half a box apart are genuine: embed in a doubled box padded with zeros
  const PositionGrid& g = A.grid;
  const long N = static_cast<long>(g.size());
  const double half = 0.5 * g.length();
  PositionGrid g2(g.x_min() - half, g.x_max() + half, 2 * g.size());
  CMatrix K2 = CMatrix::Zero(2 * N, 2 * N);
  K2.block(N / 2, N / 2, N, N) = A.kernel;
  return {weyl_symbol_minimum_image(QuantumOperator{g2, A.h, std::move(K2), A.hermitian_hint}), true};
}

Symbol restrict_box(const BoxSymbol& b, const QuantumOperator& A) {
  if (!b.embedded) return b.sym;
  const long N = static_cast<long>(A.grid.size());
  Symbol out(weyl_phase_grid(A.grid, A.h), A.h);
  for (long i = 0; i < 2 * N; ++i)
    for (long jj = 0; jj < N; ++jj) out.values(i, jj) = b.sym.values(i + N, 2 * jj);
  return out;
}

}  // namespace

Symbol weyl_symbol(const QuantumOperator& A, bool periodic) {
  return restrict_box(weyl_symbol_box(A, periodic), A);
}

cplx weyl_symbol_by_reflection(const QuantumOperator& A, PhasePoint X) {
  const PositionGrid& g = A.grid;
  const long N = static_cast<long>(g.size());
  cplx acc = 0.0;
  std::vector<cplx> col(static_cast<std::size_t>(N));
  for (long i = 0; i < N; ++i) {
    double u = g.x(static_cast<std::size_t>(i));
    for (long r = 0; r < N; ++r) col[static_cast<std::size_t>(r)] = A.kernel(r, i);
    cplx k = interp::eval_1d(col, N, g.x_min(), g.dx(), 2.0 * X.x - u, false);
    acc += std::polar(1.0, 2.0 * (u - X.x) * X.xi / A.h) * k;
  }
  return 2.0 * g.dx() * acc;
}

namespace {

// sigma(x, xi) for all xi of one column, from the banded diagonal sums.
void wick_column(const QuantumOperator& A, double x, const std::vector<double>& xis, bool periodic,
                 std::vector<cplx>& out) {
  const PositionGrid& g = A.grid;
  const long N = static_cast<long>(g.size());
  const double h = A.h, dx = g.dx();
  const long B = std::min(band_halfwidth(h, dx), N / 2 - 1);
  const long c = static_cast<long>(std::floor((x - g.x_min()) / dx));
  const long i0 = c - B, i1 = c + B + 1;
  const long W = i1 - i0 + 1;
  std::vector<double> gv(static_cast<std::size_t>(W));
  for (long k = 0; k < W; ++k) {
    double d = g.x_min() + static_cast<double>(i0 + k) * dx - x;
    gv[static_cast<std::size_t>(k)] = std::exp(-d * d / (2.0 * h));
  }
  // m(d) = sum_i K(i, i+d) g_i g_{i+d}, d in (-W, W)
  std::vector<cplx> md(static_cast<std::size_t>(2 * W - 1), cplx(0.0));
  for (long a = 0; a < W; ++a) {
    long ia = periodic ? wrap(i0 + a, N) : i0 + a;
    if (ia < 0 || ia >= N) continue;
    for (long b = 0; b < W; ++b) {
      long ib = periodic ? wrap(i0 + b, N) : i0 + b;
      if (ib < 0 || ib >= N) continue;
      double w = gv[static_cast<std::size_t>(a)] * gv[static_cast<std::size_t>(b)];
      if (w < 1e-32) continue;
      md[static_cast<std::size_t>(b - a + W - 1)] += A.kernel(ia, ib) * w;
    }
  }
  const double pref = dx * dx / std::sqrt(kPi * h);
  out.resize(xis.size());
  for (std::size_t j = 0; j < xis.size(); ++j) {
    cplx z = std::polar(1.0, dx * xis[j] / h);
    cplx acc = 0.0;
    for (long d = 2 * W - 2; d >= 0; --d) acc = acc * z + md[static_cast<std::size_t>(d)];
    // lowest power is z^{-(W-1)}
    acc *= std::pow(std::conj(z), static_cast<double>(W - 1));
    out[j] = pref * acc;
  }
}

void check_wick_coverage(const QuantumOperator& A, double x_lo, double x_hi, double xi_ext) {
  const PositionGrid& g = A.grid;
  double r = coherent_decay_radius(A.h);
  if (x_lo - r < g.x_min() || x_hi + r > g.x_max())
    fail(ErrorCode::coverage, "coherent states at the phase-grid x edges leave the position grid");
  if (xi_ext > kAliasFraction * g.xi_nyquist(A.h) * (1.0 + 1e-12))
    fail(ErrorCode::alias_violation, "phase-grid momenta beyond 0.7 of the Nyquist bound");
  // the band window must fit inside the grid
  long B = band_halfwidth(A.h, g.dx());
  if (2 * B + 2 >= static_cast<long>(g.size()))
    fail(ErrorCode::coverage, "coherent states are wider than the grid");
}

}  // namespace

void check_wick_coverage(const PositionGrid& grid, double h, const PhaseGrid& pg) {
  check_h(h);
  check_wick_coverage(QuantumOperator{grid, h, CMatrix(), false}, pg.x_min(), pg.x(pg.nx() - 1), pg.xi_extent());
}

Symbol wick_symbol_direct(const QuantumOperator& A, const PhaseGrid& pg, bool periodic) {
  check_h(A.h);
  if (!periodic) check_wick_coverage(A, pg.x_min(), pg.x(pg.nx() - 1), pg.xi_extent());
  Symbol out(pg, A.h);
  std::vector<double> xis(pg.nxi());
  for (std::size_t j = 0; j < pg.nxi(); ++j) xis[j] = pg.xi(j);
  std::vector<cplx> col;
  for (std::size_t i = 0; i < pg.nx(); ++i) {
    wick_column(A, pg.x(i), xis, periodic, col);
    for (std::size_t j = 0; j < pg.nxi(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[j];
  }
  return out;
}

std::vector<cplx> wick_symbol_at(const QuantumOperator& A, const std::vector<PhasePoint>& pts) {
  check_h(A.h);
  std::vector<cplx> out(pts.size());
  std::vector<cplx> tmp;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    check_wick_coverage(A, pts[k].x, pts[k].x, std::abs(pts[k].xi));
    wick_column(A, pts[k].x, {pts[k].xi}, false, tmp);
    out[k] = tmp[0];
  }
  return out;
}

namespace {

// Blur on the phase grid read as a torus.
Symbol periodic_heat(const Symbol& F, double h) {
  const PhaseGrid& pg = F.pg;
  const long nx = static_cast<long>(pg.nx()), nxi = static_cast<long>(pg.nxi());
  CMatrix v = F.values;
  fft::forward_2d(v);
  const double lx = pg.x_max() - pg.x_min(), lxi = pg.xi_max() - pg.xi_min();
  for (long j = 0; j < nxi; ++j) {
    double kj = 2.0 * kPi * static_cast<double>(fft::signed_index(j, nxi)) / lxi;
    for (long i = 0; i < nx; ++i) {
      double ki = 2.0 * kPi * static_cast<double>(fft::signed_index(i, nx)) / lx;
      v(i, j) *= std::exp(-0.25 * h * (ki * ki + kj * kj)) / static_cast<double>(nx * nxi);
    }
  }
  fft::backward_2d(v);
  Symbol out = F;
  out.values = v;
  return out;
}

}  // namespace

Symbol heat_smooth(const Symbol& F, double h) {
  if (!(h >= 0.0)) fail(ErrorCode::invalid_argument, "heat time must be nonnegative");
  const PhaseGrid& pg = F.pg;
  const long nx = static_cast<long>(pg.nx()), nxi = static_cast<long>(pg.nxi());
  double fmax = F.values.cwiseAbs().maxCoeff();
  if (fmax > 0.0) {
    // boundary frame must be flat: decaying, or constant across the wrap
    cplx c = F.values(0, 0);
    double dev = 0.0;
    for (long i = 0; i < nx; ++i)
      dev = std::max({dev, std::abs(F.values(i, 0) - c), std::abs(F.values(i, nxi - 1) - c)});
    for (long j = 0; j < nxi; ++j)
      dev = std::max({dev, std::abs(F.values(0, j) - c), std::abs(F.values(nx - 1, j) - c)});
    if (dev > 1e-8 * fmax)
      fail(ErrorCode::boundary_leakage, "symbol is not flat on the phase-grid boundary");
  }
  return periodic_heat(F, h);
}

// The natural grid is a torus in both variables, so no flatness check applies.
Symbol wick_symbol_via_weyl(const QuantumOperator& A) {
  BoxSymbol b = weyl_symbol_box(A, false);
  b.sym = periodic_heat(b.sym, A.h);
  return restrict_box(b, A);
}

QuantumOperator gaussian_conjugation_average(const QuantumOperator& A, double s, double ht) {
  if (!(s > 0.0) || !(ht > 0.0)) fail(ErrorCode::invalid_argument, "smoothing scale must be positive");
  const PositionGrid& g = A.grid;
  const long N = static_cast<long>(g.size());
  const double dx = g.dx();
  long kmax = static_cast<long>(std::ceil(6.0 * std::sqrt(s) / dx));
  if (kmax > N / 2 - 1) {
    kmax = N / 2 - 1;
    double tail = std::exp(-std::pow(static_cast<double>(kmax) * dx, 2) / s);
    if (tail > 1e-8) fail(ErrorCode::coverage, "Gaussian weight is truncated by the grid");
  }
  std::vector<double> w(static_cast<std::size_t>(2 * kmax + 1));
  double tot = 0.0;
  for (long k = -kmax; k <= kmax; ++k) {
    double y = static_cast<double>(k) * dx;
    w[static_cast<std::size_t>(k + kmax)] = std::exp(-y * y / s);
    tot += w[static_cast<std::size_t>(k + kmax)];
  }
  for (double& v : w) v /= tot;

  CMatrix S = CMatrix::Zero(N, N);
  for (long k = -kmax; k <= kmax; ++k) {
    double wk = w[static_cast<std::size_t>(k + kmax)];
    long sh = wrap(k, N);
    for (long l = 0; l < N; ++l) {
      long lc = wrap(l - k, N);
      // S(i, l) += w A(i - k, l - k), rows rotated down by sh
      S.col(l).tail(N - sh) += wk * A.kernel.col(lc).head(N - sh);
      if (sh > 0) S.col(l).head(sh) += wk * A.kernel.col(lc).tail(sh);
    }
  }
  // momentum average of the modulations, exact Gaussian integral
  std::vector<double> damp(static_cast<std::size_t>(N));
  for (long d = 0; d < N; ++d) {
    double D = static_cast<double>(d) * dx;
    damp[static_cast<std::size_t>(d)] = std::exp(-s * D * D / (4.0 * ht * ht));
  }
  for (long l = 0; l < N; ++l)
    for (long i = 0; i < N; ++i) S(i, l) *= damp[static_cast<std::size_t>(std::abs(i - l))];
  return QuantumOperator{g, A.h, std::move(S), A.hermitian_hint};
}

QuantumOperator smooth_Th(const QuantumOperator& A) { return gaussian_conjugation_average(A, A.h, A.h); }

QuantumOperator smooth_Th_symbolic(const QuantumOperator& A) {
  PhaseGrid pg = natural_phase_grid(A.grid, A.h);
  Symbol w = wick_symbol_direct(A, pg, true);
  return weyl_quantize(w, A.grid, A.h);
}

QuantumOperator smooth_Tlambda(const QuantumOperator& A, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorCode::invalid_argument, "lambda must be positive");
  return gaussian_conjugation_average(A, lambda, 1.0);
}

// Counterexample pieces, h = 1.

double counterexample_a(double l) { return 0.25 * l + 1.0 / l; }
double counterexample_b(double l) { return 0.25 * l; }
double counterexample_c(double l) { return 0.25 * l; }
double counterexample_prefactor(double l) { return 1.0 / std::sqrt(4.0 * kPi * l); }

double counterexample_kernel(double l, double x, double y) {
  double a = counterexample_a(l), b = counterexample_b(l), c = counterexample_c(l);
  return counterexample_prefactor(l) * std::exp(-(a * x * x + b * y * y + 2.0 * c * x * y));
}

double counterexample_trace_norm(double l) {
  double a = counterexample_a(l), b = counterexample_b(l), c = counterexample_c(l);
  double mu = c / std::sqrt(a * b);
  return counterexample_prefactor(l) * std::pow(a * b, -0.25) * std::sqrt(kPi / (2.0 * (1.0 - mu)));
}

cplx counterexample_symbol(double alpha, double x, double xi) {
  return std::polar(std::pow(1.0 + x * x + xi * xi, -alpha), 2.0 * x * xi);
}

cplx counterexample_wick_node(double l, double x, double xi) {
  // a_l(Y) = exp(-Y^T Q Y), Q = [[l, -i], [-i, l]]; blur with pi^{-1} e^{-|X|^2}
  const cplx I(0.0, 1.0);
  cplx q11 = l, q12 = -I;
  double det = (1.0 + l) * (1.0 + l) + 1.0;
  cplx i11 = (1.0 + l) / det, i12 = I / det;
  cplx m11 = q11 * i11 + q12 * i12;
  cplx m12 = q11 * i12 + q12 * i11;
  cplx quad = m11 * (x * x + xi * xi) + 2.0 * m12 * x * xi;
  return std::exp(-quad) / std::sqrt(det);
}

std::vector<CounterexampleNode> counterexample_nodes(double alpha, const CounterexampleQuadrature& q) {
  if (!(alpha > 0.5) || alpha > 1.0) fail(ErrorCode::invalid_argument, "alpha must lie in (1/2, 1]");
  if (!(q.lambda_min > 0.0) || !(q.lambda_max > q.lambda_min) || q.nodes < 2)
    fail(ErrorCode::invalid_argument, "bad counterexample quadrature");
  auto gl = gauss_legendre(q.nodes);
  double s0 = std::log(q.lambda_min), s1 = std::log(q.lambda_max);
  double ga = std::tgamma(alpha);
  std::vector<CounterexampleNode> out;
  for (int k = 0; k < q.nodes; ++k) {
    double s = 0.5 * (s1 - s0) * gl.nodes[static_cast<std::size_t>(k)] + 0.5 * (s1 + s0);
    double l = std::exp(s);
    double w = 0.5 * (s1 - s0) * gl.weights[static_cast<std::size_t>(k)] * l * std::exp(-l) *
               std::pow(l, alpha - 1.0) / ga;
    out.push_back({l, w, counterexample_trace_norm(l), 0.5 / std::sqrt(1.0 + l * l)});
  }
  return out;
}

QuantumOperator counterexample_operator(const std::vector<CounterexampleNode>& nodes,
                                        const PositionGrid& grid) {
  const long N = static_cast<long>(grid.size());
  RMatrix K = RMatrix::Zero(N, N);
  for (const auto& nd : nodes) {
    double a = counterexample_a(nd.lambda), b = counterexample_b(nd.lambda), c = counterexample_c(nd.lambda);
    double pre = nd.weight * counterexample_prefactor(nd.lambda);
    for (long j = 0; j < N; ++j) {
      double y = grid.x(static_cast<std::size_t>(j));
      for (long i = 0; i < N; ++i) {
        double x = grid.x(static_cast<std::size_t>(i));
        double e = a * x * x + b * y * y + 2.0 * c * x * y;
        if (e < 700.0) K(i, j) += pre * std::exp(-e);
      }
    }
  }
  return QuantumOperator{grid, 1.0, K.cast<cplx>(), false};
}

CounterexampleResult counterexample_build(const CounterexampleSpec& spec) {
  CounterexampleResult r;
  r.nodes = counterexample_nodes(spec.alpha, spec.quad);
  CounterexampleQuadrature dq = spec.quad;
  dq.nodes *= 2;
  auto doubled = counterexample_nodes(spec.alpha, dq);
  r.P = counterexample_operator(r.nodes, spec.grid);
  r.trace_norm = trace_norm(r.P);
  r.trace_norm_doubled = trace_norm(counterexample_operator(doubled, spec.grid));
  for (const auto& nd : r.nodes) {
    r.trace_norm_bound += nd.weight * nd.trace_norm;
    r.trace += nd.weight * nd.trace;
  }
  if (std::abs(r.trace_norm - r.trace_norm_doubled) > 1e-3 * std::abs(r.trace_norm_doubled))
    fail(ErrorCode::quadrature_divergence, "node doubling moved the trace norm by more than 1e-3");
  r.radii = spec.radii;
  double alpha = spec.alpha;
  const auto& nodes = r.nodes;
  for (double R : spec.radii) {
    r.p_ball_mass.push_back(
        ball_mass([&](double x, double xi) { return counterexample_symbol(alpha, x, xi); }, R));
    r.wick_ball_mass.push_back(ball_mass(
        [&](double x, double xi) {
          cplx acc = 0.0;
          for (const auto& nd : nodes) acc += nd.weight * counterexample_wick_node(nd.lambda, x, xi);
          return acc;
        },
        R));
  }
  return r;
}

}  // namespace pslab
