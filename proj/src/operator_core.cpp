#include "pslab/operator_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "pslab/fft.hpp"

namespace pslab {
namespace {

void same_space(const QuantumOperator& A, const QuantumOperator& B) {
  if (!(A.grid == B.grid) || A.h != B.h)
    fail(ErrorCode::grid_mismatch, "operators live on different grids or h");
}

QuantumOperator make(const PositionGrid& g, double h, CMatrix k, bool herm) {
  return QuantumOperator{g, h, std::move(k), herm};
}

}  // namespace

QuantumOperator identity_operator(const PositionGrid& grid, double h) {
  auto n = static_cast<Eigen::Index>(grid.size());
  return make(grid, h, CMatrix::Identity(n, n) / grid.dx(), true);
}

QuantumOperator multiplication_operator(const RVector& values, const PositionGrid& grid, double h) {
  if (values.size() != static_cast<Eigen::Index>(grid.size()))
    fail(ErrorCode::grid_mismatch, "multiplier length differs from grid");
  CMatrix k = values.cast<cplx>().asDiagonal();
  return make(grid, h, k / grid.dx(), true);
}

QuantumOperator position_operator(double h, const PositionGrid& grid) {
  return multiplication_operator(grid.nodes(), grid, h);
}

void apply_momentum_columns(CMatrix& cols, const PositionGrid& grid, double h) {
  long n = static_cast<long>(grid.size());
  if (cols.rows() != n) fail(ErrorCode::grid_mismatch, "column length differs from grid");
  fft::forward_columns(cols);
  RVector mult(n);
  for (long j = 0; j < n; ++j)
    mult(j) = (j == n / 2) ? 0.0 : h * grid.wavenumber(static_cast<std::size_t>(j)) / n;
  cols = mult.asDiagonal() * cols;
  fft::backward_columns(cols);
}

QuantumOperator momentum_operator(double h, const PositionGrid& grid) {
  auto n = static_cast<Eigen::Index>(grid.size());
  CMatrix m = CMatrix::Identity(n, n);
  apply_momentum_columns(m, grid, h);
  return make(grid, h, m / grid.dx(), true);
}

QuantumOperator projector(const WaveFunction& f) {
  return make(f.grid, f.h, f.values * f.values.adjoint(), true);
}

QuantumOperator mixture(const std::vector<WaveFunction>& orbitals, const std::vector<double>& weights) {
  if (orbitals.empty() || orbitals.size() != weights.size())
    fail(ErrorCode::invalid_argument, "mixture needs matching orbitals and weights");
  const auto& g = orbitals.front().grid;
  auto n = static_cast<Eigen::Index>(g.size());
  CMatrix f(n, static_cast<Eigen::Index>(orbitals.size()));
  for (std::size_t k = 0; k < orbitals.size(); ++k) {
    if (!(orbitals[k].grid == g)) fail(ErrorCode::grid_mismatch, "orbitals on different grids");
    f.col(static_cast<Eigen::Index>(k)) = orbitals[k].values * std::sqrt(weights[k]);
  }
  return make(g, orbitals.front().h, f * f.adjoint(), true);
}

QuantumOperator compose(const QuantumOperator& A, const QuantumOperator& B) {
  same_space(A, B);
  return make(A.grid, A.h, (A.kernel * B.kernel) * A.grid.dx(), false);
}

QuantumOperator adjoint(const QuantumOperator& A) {
  return make(A.grid, A.h, A.kernel.adjoint(), A.hermitian_hint);
}

QuantumOperator linear_combination(cplx a, const QuantumOperator& A, cplx b, const QuantumOperator& B) {
  same_space(A, B);
  bool herm = A.hermitian_hint && B.hermitian_hint && a.imag() == 0.0 && b.imag() == 0.0;
  return make(A.grid, A.h, a * A.kernel + b * B.kernel, herm);
}

QuantumOperator commutator(const QuantumOperator& A, const QuantumOperator& B) {
  same_space(A, B);
  CMatrix ab = A.kernel * B.kernel;
  CMatrix ba = B.kernel * A.kernel;
  return make(A.grid, A.h, (ab - ba) * A.grid.dx(), false);
}

WaveFunction apply(const QuantumOperator& A, const WaveFunction& f) {
  if (!(A.grid == f.grid)) fail(ErrorCode::grid_mismatch, "operator and state on different grids");
  return WaveFunction{f.grid, f.h, (A.kernel * f.values) * A.grid.dx()};
}

cplx trace(const QuantumOperator& A) { return A.kernel.diagonal().sum() * A.grid.dx(); }

RVector singular_values(const QuantumOperator& A) {
  CMatrix m = A.kernel * A.grid.dx();
  RVector s;
  if (A.hermitian_hint) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    s = es.eigenvalues().cwiseAbs();
    std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  } else {
    Eigen::BDCSVD<CMatrix> svd(m);
    s = svd.singularValues();
  }
  return s;
}

Norms norms(const QuantumOperator& A) {
  RVector s = singular_values(A);
  return {s.size() ? s.maxCoeff() : 0.0, s.norm(), s.sum()};
}

double trace_norm(const QuantumOperator& A) { return singular_values(A).sum(); }
double op_norm(const QuantumOperator& A) { return singular_values(A).maxCoeff(); }

double hermiticity_defect(const QuantumOperator& A) {
  double m = A.kernel.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  return (A.kernel - A.kernel.adjoint()).cwiseAbs().maxCoeff() / m;
}

QuantumOperator commutator_P(const QuantumOperator& A) {
  CMatrix pa = A.kernel;
  apply_momentum_columns(pa, A.grid, A.h);
  // K M_P = (M_P K^*)^* since M_P is hermitian
  CMatrix ap = A.kernel.adjoint();
  apply_momentum_columns(ap, A.grid, A.h);
  return make(A.grid, A.h, pa - ap.adjoint(), false);
}

QuantumOperator commutator_Q(const QuantumOperator& A) {
  auto n = static_cast<Eigen::Index>(A.grid.size());
  CMatrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      k(i, j) = (A.grid.x(static_cast<std::size_t>(i)) - A.grid.x(static_cast<std::size_t>(j))) *
                A.kernel(i, j);
  return make(A.grid, A.h, k, false);
}

CMatrix smooth_basis(const PositionGrid& grid, double h) {
  double L = grid.length();
  double radius = std::min(0.5 * L, kAliasFraction * grid.xi_nyquist(h)) - 3.0 * std::sqrt(h);
  if (radius <= std::sqrt(h)) fail(ErrorCode::alias_violation, "grid too coarse for a smooth basis");
  // classical radius of the n-th Hermite function is sqrt(h (2n+1))
  long m = static_cast<long>(std::floor((radius * radius / h - 1.0) / 2.0)) + 1;
  m = std::clamp(m, 1L, static_cast<long>(grid.size()) / 2);
  auto n = static_cast<Eigen::Index>(grid.size());
  double c = 0.5 * (grid.x_min() + grid.x_max());
  double sq = std::sqrt(h);
  RMatrix b(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    double y = (grid.x(static_cast<std::size_t>(i)) - c) / sq;
    double p0 = std::pow(kPi * h, -0.25) * std::exp(-0.5 * y * y);
    double p1 = std::sqrt(2.0) * y * p0;
    b(i, 0) = p0;
    if (m > 1) b(i, 1) = p1;
    for (long k = 1; k + 1 < m; ++k) {
      double p2 = std::sqrt(2.0 / (k + 1)) * y * p1 - std::sqrt(static_cast<double>(k) / (k + 1)) * p0;
      b(i, k + 1) = p2;
      p0 = p1;
      p1 = p2;
    }
  }
  double sdx = std::sqrt(grid.dx());
  Eigen::HouseholderQR<RMatrix> qr(b * sdx);
  RMatrix q = qr.householderQ() * RMatrix::Identity(n, m);
  // keep the sign convention of the raw functions
  for (long k = 0; k < m; ++k)
    if (q.col(k).dot(b.col(k)) < 0) q.col(k) *= -1.0;
  return q.cast<cplx>() / sdx;
}

CMatrix compress(const QuantumOperator& A, const CMatrix& basis) {
  double dx = A.grid.dx();
  return (basis.adjoint() * (A.kernel * basis)) * (dx * dx);
}

double kernel_boundary_ratio(const QuantumOperator& A) {
  double m = A.kernel.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  auto n = A.kernel.rows();
  double b = std::max({A.kernel.row(0).cwiseAbs().maxCoeff(), A.kernel.row(n - 1).cwiseAbs().maxCoeff(),
                       A.kernel.col(0).cwiseAbs().maxCoeff(), A.kernel.col(n - 1).cwiseAbs().maxCoeff()});
  return b / m;
}

RegularityReport regularity(const QuantumOperator& A) {
  RegularityReport r;
  QuantumOperator cp = commutator_P(A);
  QuantumOperator cq = commutator_Q(A);
  RVector sp, sq;
  if (kernel_boundary_ratio(A) <= 1e-10) {
    sp = singular_values(cp);
    sq = singular_values(cq);
  } else {
    CMatrix basis = smooth_basis(A.grid, A.h);
    r.compressed = true;
    r.basis_size = static_cast<std::size_t>(basis.cols());
    sp = Eigen::BDCSVD<CMatrix>(compress(cp, basis)).singularValues();
    sq = Eigen::BDCSVD<CMatrix>(compress(cq, basis)).singularValues();
  }
  r.i_inf = (sp.maxCoeff() + sq.maxCoeff()) / A.h;
  r.i_tr = (sp.sum() + sq.sum()) / A.h;
  return r;
}

DensityCheck inspect_density(const QuantumOperator& rho) {
  DensityCheck c;
  c.trace_defect = std::abs(trace(rho) - 1.0);
  c.hermitian_defect = hermiticity_defect(rho);
  CMatrix m = rho.kernel * rho.grid.dx();
  CMatrix hm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hm, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

void validate_density(const QuantumOperator& rho, double trace_tol, double eig_tol, double herm_tol) {
  DensityCheck c = inspect_density(rho);
  if (c.trace_defect > trace_tol || c.hermitian_defect > herm_tol || c.min_eigenvalue < -eig_tol)
    fail(ErrorCode::invariant_violation,
         "density check failed: trace defect " + std::to_string(c.trace_defect) + ", hermitian defect " +
             std::to_string(c.hermitian_defect) + ", min eigenvalue " + std::to_string(c.min_eigenvalue));
}

}  // namespace pslab
