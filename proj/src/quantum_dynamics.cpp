#include "pslab/quantum_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "pslab/fft.hpp"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"

namespace pslab {

namespace {

constexpr double kTailLimit = 1e-8;
constexpr double kTraceTol = 1e-6;
constexpr double kHermTol = 1e-10;
constexpr double kEigTol = 1e-8;
constexpr double kOrthoTol = 1e-8;

RVector kinetic_multiplier(const PositionGrid& g, double h) {
  const long n = static_cast<long>(g.size());
  RVector k2(n);
  for (long j = 0; j < n; ++j) {
    double k = g.wavenumber(static_cast<std::size_t>(j));
    k2(j) = h * h * k * k;
  }
  return k2;
}

double tail_fraction(const CMatrix& spectra, double cut) {
  const long n = spectra.rows();
  double total = 0.0, tail = 0.0;
  for (long j = 0; j < n; ++j) {
    double p = spectra.row(j).squaredNorm();
    total += p;
    if (std::abs(static_cast<double>(fft::signed_index(j, n))) > cut) tail += p;
  }
  return total > 0.0 ? tail / total : 0.0;
}

void check_field(const PotentialField& V, const PositionGrid& g) {
  if (!(V.grid == g) || V.values.size() != static_cast<Eigen::Index>(g.size()))
    fail(ErrorCode::grid_mismatch, "potential field is sampled on a different grid");
}

}  // namespace

PotentialField mean_field_Vq_from_density(const RVector& density, const PositionGrid& grid,
                                          const PotentialSpec& pot) {
  const long n = static_cast<long>(grid.size());
  if (density.size() != n) fail(ErrorCode::grid_mismatch, "density does not match the grid");
  PotentialField f{grid, RVector(n)};
  for (long i = 0; i < n; ++i) f.values(i) = pot.V(grid.x(static_cast<std::size_t>(i)));
  if (pot.W.is_zero()) return f;
  // W only depends on x_i - x_j = (i - j) dx
  RVector w(2 * n - 1);
  for (long d = -(n - 1); d <= n - 1; ++d) w(d + n - 1) = pot.W(static_cast<double>(d) * grid.dx());
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long j = 0; j < n; ++j) acc += w(i - j + n - 1) * density(j);
    f.values(i) += acc * grid.dx();
  }
  return f;
}

PotentialField mean_field_Vq(const QuantumOperator& rho, const PotentialSpec& pot) {
  return mean_field_Vq_from_density(rho.kernel.diagonal().real(), rho.grid, pot);
}

double spectral_tail(const CVector& f) {
  CMatrix m = f;
  fft::forward_columns(m);
  return tail_fraction(m, kAliasFraction * 0.5 * static_cast<double>(f.size()));
}

void schrodinger_step_columns(CMatrix& cols, const PositionGrid& grid, double h, double dt,
                              const PotentialField& V) {
  check_field(V, grid);
  const long n = static_cast<long>(grid.size());
  if (cols.rows() != n) fail(ErrorCode::grid_mismatch, "columns do not match the grid");
  CVector kick(n);
  for (long i = 0; i < n; ++i) kick(i) = std::polar(1.0, -0.5 * dt * V.values(i) / h);
  RVector k2 = kinetic_multiplier(grid, h);
  CVector drift(n);
  for (long j = 0; j < n; ++j) drift(j) = std::polar(1.0 / static_cast<double>(n), -dt * k2(j) / h);
  cols = kick.asDiagonal() * cols;
  fft::forward_columns(cols);
  if (tail_fraction(cols, kAliasFraction * 0.5 * static_cast<double>(n)) > kTailLimit)
    fail(ErrorCode::alias_violation, "wave function carries momenta beyond 0.7 of the Nyquist bound");
  cols = drift.asDiagonal() * cols;
  fft::backward_columns(cols);
  cols = kick.asDiagonal() * cols;
}

WaveFunction schrodinger_step(const WaveFunction& f, double dt, const PotentialField& V) {
  CMatrix m = f.values;
  schrodinger_step_columns(m, f.grid, f.h, dt, V);
  return WaveFunction{f.grid, f.h, m.col(0)};
}

QuantumOperator conjugate_step(const QuantumOperator& rho, double dt, const PotentialField& V) {
  CMatrix k = rho.kernel;
  schrodinger_step_columns(k, rho.grid, rho.h, dt, V);
  CMatrix kt = k.adjoint();
  schrodinger_step_columns(kt, rho.grid, rho.h, dt, V);
  return QuantumOperator{rho.grid, rho.h, kt.adjoint(), rho.hermitian_hint};
}

QuantumOperator MeanFieldState::density() const {
  if (!factorized()) return QuantumOperator{grid, h, kernel, true};
  return mixture(orbitals, occupations);
}

RVector MeanFieldState::diagonal_density() const {
  if (!factorized()) return kernel.diagonal().real();
  RVector n = RVector::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < orbitals.size(); ++k) n += occupations[k] * orbitals[k].values.cwiseAbs2();
  return n;
}

MeanFieldState make_state(std::vector<WaveFunction> orbitals, std::vector<double> occupations,
                          const PotentialSpec& pot) {
  if (orbitals.empty() || orbitals.size() != occupations.size())
    fail(ErrorCode::invalid_argument, "orbitals and occupations must match and be non-empty");
  double sum = 0.0;
  for (double l : occupations) {
    if (l < 0.0) fail(ErrorCode::invariant_violation, "occupations must be nonnegative");
    sum += l;
  }
  if (std::abs(sum - 1.0) > kTraceTol) fail(ErrorCode::invariant_violation, "occupations must sum to 1");
  MeanFieldState s;
  s.grid = orbitals.front().grid;
  s.h = orbitals.front().h;
  s.pot = pot;
  for (std::size_t a = 0; a < orbitals.size(); ++a) {
    if (!(orbitals[a].grid == s.grid)) fail(ErrorCode::grid_mismatch, "orbitals on different grids");
    for (std::size_t b = 0; b <= a; ++b) {
      double target = a == b ? 1.0 : 0.0;
      if (std::abs(inner(orbitals[a], orbitals[b]) - target) > kOrthoTol)
        fail(ErrorCode::invariant_violation, "orbitals must be orthonormal");
    }
  }
  s.orbitals = std::move(orbitals);
  s.occupations = std::move(occupations);
  return s;
}

MeanFieldState make_state(const QuantumOperator& rho, const PotentialSpec& pot, std::size_t max_rank) {
  validate_density(rho, kTraceTol, kEigTol, kHermTol);
  const double dx = rho.grid.dx();
  CMatrix m = rho.kernel * dx;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const RVector& ev = es.eigenvalues();
  const long n = ev.size();
  std::vector<long> keep;
  for (long i = n - 1; i >= 0; --i)
    if (ev(i) > 1e-13) keep.push_back(i);
  MeanFieldState s;
  s.grid = rho.grid;
  s.h = rho.h;
  s.pot = pot;
  // the orbital form is exact only if the discarded spectrum is negligible
  double dropped = ev.cwiseAbs().sum() - [&] {
    double a = 0;
    for (long i : keep) a += std::abs(ev(i));
    return a;
  }();
  if (keep.size() > max_rank || dropped > 1e-12) {
    s.kernel = rho.kernel;
    return s;
  }
  for (long i : keep) {
    s.orbitals.push_back(WaveFunction{rho.grid, rho.h, es.eigenvectors().col(i) / std::sqrt(dx)});
    s.occupations.push_back(ev(i));
  }
  // renormalize occupations onto the trace
  double sum = 0.0;
  for (double l : s.occupations) sum += l;
  for (double& l : s.occupations) l /= sum;
  return s;
}

MeanFieldState to_dense(const MeanFieldState& s) {
  MeanFieldState d = s;
  d.kernel = s.density().kernel;
  d.orbitals.clear();
  d.occupations.clear();
  return d;
}

namespace {

MeanFieldState advance(const MeanFieldState& s, double dt, const PotentialField& V) {
  MeanFieldState out = s;
  out.t = s.t + dt;
  if (s.factorized()) {
    const long n = static_cast<long>(s.grid.size());
    CMatrix cols(n, static_cast<Eigen::Index>(s.orbitals.size()));
    for (std::size_t k = 0; k < s.orbitals.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = s.orbitals[k].values;
    schrodinger_step_columns(cols, s.grid, s.h, dt, V);
    for (std::size_t k = 0; k < s.orbitals.size(); ++k) out.orbitals[k].values = cols.col(static_cast<Eigen::Index>(k));
  } else {
    out.kernel = conjugate_step(QuantumOperator{s.grid, s.h, s.kernel, true}, dt, V).kernel;
  }
  return out;
}

}  // namespace

MeanFieldState tdhf_step(const MeanFieldState& s, double dt, StepDiagnostics* diag, bool spectrum_check) {
  PotentialField v0 = mean_field_Vq_from_density(s.diagonal_density(), s.grid, s.pot);
  MeanFieldState out;
  if (s.pot.W.is_zero()) {
    out = advance(s, dt, v0);
  } else {
    MeanFieldState mid = advance(s, 0.5 * dt, v0);
    PotentialField vm = mean_field_Vq_from_density(mid.diagonal_density(), s.grid, s.pot);
    out = advance(s, dt, vm);
  }

  StepDiagnostics d;
  if (out.factorized()) {
    double sum = 0.0;
    for (double l : out.occupations) sum += l;
    d.trace_defect = std::abs(sum - 1.0);
    d.min_eigenvalue = *std::min_element(out.occupations.begin(), out.occupations.end());
    for (std::size_t a = 0; a < out.orbitals.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b)
        d.orthonormality_defect = std::max(
            d.orthonormality_defect, std::abs(inner(out.orbitals[a], out.orbitals[b]) - (a == b ? 1.0 : 0.0)));
  } else {
    QuantumOperator rho{out.grid, out.h, out.kernel, true};
    d.trace_defect = std::abs(trace(rho) - 1.0);
    d.hermitian_defect = hermiticity_defect(rho);
    if (spectrum_check) d.min_eigenvalue = inspect_density(rho).min_eigenvalue;
  }
  if (diag) *diag = d;
  if (d.trace_defect > kTraceTol || d.hermitian_defect > kHermTol || d.min_eigenvalue < -kEigTol ||
      d.orthonormality_defect > kOrthoTol)
    fail(ErrorCode::invariant_violation,
         "TDHF step at t = " + std::to_string(out.t) + " broke the density invariants: trace defect " +
             std::to_string(d.trace_defect) + ", hermitian defect " + std::to_string(d.hermitian_defect) +
             ", min eigenvalue " + std::to_string(d.min_eigenvalue) + ", orthonormality defect " +
             std::to_string(d.orthonormality_defect));
  return out;
}

MeanFieldState tdhf_evolve(MeanFieldState s, double t_end, double dt, int spectrum_every) {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "time step must be positive");
  double span = t_end - s.t;
  if (span / dt > 1e6) fail(ErrorCode::step_overflow, "TDHF run needs more than 1e6 steps");
  long n = static_cast<long>(std::ceil(std::abs(span) / dt - 1e-9));
  if (n == 0) return s;
  double step = span / static_cast<double>(n);
  double t0 = s.t;
  for (long k = 1; k <= n; ++k) {
    bool check = spectrum_every > 0 && (k % spectrum_every == 0 || k == n);
    s = tdhf_step(s, step, nullptr, check);
    s.t = t0 + static_cast<double>(k) * step;
  }
  return s;
}

double tdhf_energy(const MeanFieldState& s) {
  const long n = static_cast<long>(s.grid.size());
  const double dx = s.grid.dx();
  RVector k2 = kinetic_multiplier(s.grid, s.h);
  double kinetic = 0.0;
  if (s.factorized()) {
    for (std::size_t k = 0; k < s.orbitals.size(); ++k) {
      CMatrix c = s.orbitals[k].values;
      fft::forward_columns(c);
      kinetic += s.occupations[k] * (k2.array() * c.col(0).cwiseAbs2().array()).sum() * dx / static_cast<double>(n);
    }
  } else {
    CMatrix c = s.kernel;
    fft::forward_columns(c);
    c = (k2 / static_cast<double>(n)).asDiagonal() * c;
    fft::backward_columns(c);
    kinetic = c.diagonal().real().sum() * dx;
  }
  RVector dens = s.diagonal_density();
  PotentialField vq = mean_field_Vq_from_density(dens, s.grid, s.pot);
  double potential = 0.0, interaction = 0.0;
  for (long i = 0; i < n; ++i) {
    double v = s.pot.V(s.grid.x(static_cast<std::size_t>(i)));
    potential += v * dens(i) * dx;
    interaction += 0.5 * (vq.values(i) - v) * dens(i) * dx;
  }
  return kinetic + potential + interaction;
}

namespace {

PhaseDistribution checked_husimi(RMatrix u, const PhaseGrid& pg) {
  double umax = u.maxCoeff();
  if (u.minCoeff() < -1e-10 * std::max(umax, 1.0))
    fail(ErrorCode::invariant_violation, "Husimi density is negative");
  PhaseDistribution d(pg);
  d.values = std::move(u);
  return d;
}

}  // namespace

PhaseDistribution husimi_density(const QuantumOperator& rho, const PhaseGrid& pg) {
  Symbol w = wick_symbol_direct(rho, pg);
  return checked_husimi(w.values.real() / (2.0 * kPi * rho.h), pg);
}

PhaseDistribution husimi_density(const MeanFieldState& s, const PhaseGrid& pg) {
  if (!s.factorized()) return husimi_density(s.density(), pg);
  check_wick_coverage(s.grid, s.h, pg);
  RMatrix u = RMatrix::Zero(static_cast<Eigen::Index>(pg.nx()), static_cast<Eigen::Index>(pg.nxi()));
  for (std::size_t k = 0; k < s.orbitals.size(); ++k)
    u += s.occupations[k] * coherent_transform(s.orbitals[k], s.h, pg).cwiseAbs2();
  return checked_husimi(u / (2.0 * kPi * s.h), pg);
}

double position_mean(const WaveFunction& f) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.values.size(); ++i)
    acc += f.grid.x(static_cast<std::size_t>(i)) * std::norm(f.values(i));
  return acc * f.grid.dx();
}

double position_variance(const WaveFunction& f) {
  double m = position_mean(f), acc = 0.0;
  for (Eigen::Index i = 0; i < f.values.size(); ++i) {
    double d = f.grid.x(static_cast<std::size_t>(i)) - m;
    acc += d * d * std::norm(f.values(i));
  }
  return acc * f.grid.dx();
}

}  // namespace pslab
