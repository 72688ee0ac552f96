#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "pslab/fft.hpp"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantum_dynamics.hpp"

using namespace pslab;

namespace {

PositionGrid default_grid() { return PositionGrid(-8.0, 8.0, 256); }

// Dense H = -h^2 d^2/dx^2 + V as a matrix acting on sample vectors.
CMatrix dense_hamiltonian(const PositionGrid& g, double h, const Potential& V) {
  auto n = static_cast<Eigen::Index>(g.size());
  CMatrix m = CMatrix::Identity(n, n);
  fft::forward_columns(m);
  for (Eigen::Index j = 0; j < n; ++j) {
    double k = g.wavenumber(static_cast<std::size_t>(j));
    m.row(j) *= h * h * k * k / static_cast<double>(n);
  }
  fft::backward_columns(m);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) += V(g.x(static_cast<std::size_t>(i)));
  return 0.5 * (m + m.adjoint());
}

std::vector<WaveFunction> orthonormal_orbitals(const PositionGrid& g, double h) {
  // Gram-Schmidt on three coherent states
  std::vector<WaveFunction> out;
  for (PhasePoint X : {PhasePoint{-0.8, 0.3}, PhasePoint{0.5, -0.4}, PhasePoint{0.2, 0.9}}) {
    auto f = coherent_state(X, h, g);
    for (const auto& e : out) f.values -= inner(f, e) * e.values;
    f.values /= f.norm();
    out.push_back(f);
  }
  return out;
}

PotentialSpec interacting() {
  return {potential_from_name("cosine", 0.5, 1.0), potential_from_name("gaussian", 0.8, 1.0)};
}

}  // namespace

TEST_CASE("mean field V_q") {
  auto g = default_grid();
  double h = 0.2;
  auto rho = projector(coherent_state({0, 0}, h, g));
  PotentialSpec pot{potential_from_name("cosine", 0.3, 1.2), Potential{}};
  auto vq = mean_field_Vq(rho, pot);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(vq.values(static_cast<Eigen::Index>(i)) == pot.V(g.x(i)));

  double s = 0.9;
  PotentialSpec withW{Potential{}, potential_from_name("gaussian", 0.7, s)};
  vq = mean_field_Vq(rho, withW);
  double worst = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double x = g.x(i);
    double e = 0.7 * s / std::sqrt(s * s + h) * std::exp(-x * x / (s * s + h));
    worst = std::max(worst, std::abs(vq.values(static_cast<Eigen::Index>(i)) - e));
  }
  CHECK(worst < 1e-4);

  // a constant W gives Tr(c rho) = c
  PotentialSpec flat{Potential{}, potential_from_name("gaussian", 1.7, 1e6)};
  auto mix = mixture(orthonormal_orbitals(g, h), {0.5, 0.3, 0.2});
  CHECK((mean_field_Vq(mix, flat).values.array() - 1.7).abs().maxCoeff() < 1e-8);
}

TEST_CASE("Schrodinger propagation") {
  auto g = default_grid();
  double h = 0.1;
  PotentialField zero{g, RVector::Zero(256)};
  double xi0 = 0.8;
  auto f = coherent_state({0, xi0}, h, g);
  double dt = 0.01;
  double worst_norm = 0;
  for (int n = 1; n <= 200; ++n) {
    f = schrodinger_step(f, dt, zero);
    worst_norm = std::max(worst_norm, std::abs(f.norm() - 1.0));
  }
  CHECK(std::abs(position_mean(f) - 2 * 2.0 * xi0) < 1e-4);
  CHECK(worst_norm < 1e-10);

  // harmonic oscillator against the dense eigendecomposition
  auto V = potential_from_name("harmonic", 1.0, 1.0);
  PotentialField vf{g, RVector::NullaryExpr(256, [&](Eigen::Index i) { return V(g.x(static_cast<std::size_t>(i))); })};
  Eigen::SelfAdjointEigenSolver<CMatrix> es(dense_hamiltonian(g, h, V));
  auto f0 = coherent_state({1.0, 0.5}, h, g);
  auto exact = [&](double t) {
    CVector c = es.eigenvectors().adjoint() * f0.values;
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -es.eigenvalues()(k) * t / h);
    return CVector(es.eigenvectors() * c);
  };
  auto w = f0;
  double t = 0;
  int steps = static_cast<int>(std::lround(kPi / 1e-3));
  double step = kPi / steps;
  for (int n = 0; n < steps; ++n) {
    w = schrodinger_step(w, step, vf);
    t += step;
    if (n == steps / 3) {
      WaveFunction ex{g, h, exact(t)};
      CHECK(std::abs(std::abs(inner(w, ex)) - 1.0) < 1e-4);
    }
  }
  double fidelity = std::norm(inner(w, f0));
  CHECK(fidelity >= 1 - 1e-3);
  CHECK(std::norm(inner(WaveFunction{g, h, exact(kPi)}, f0)) >= 1 - 1e-6);

  // momenta too close to the Nyquist bound
  auto fast = coherent_state({0, 0.9 * g.xi_nyquist(h)}, h, g);
  CHECK_THROWS_AS(schrodinger_step(fast, dt, zero), Error);
}

TEST_CASE("TDHF reductions") {
  auto g = default_grid();
  double h = 0.1;
  PotentialSpec lin{potential_from_name("cosine", 0.5, 1.0), Potential{}};
  auto f = coherent_state({0.4, -0.3}, h, g);
  auto s = make_state({f}, {1.0}, lin);
  PotentialField vf{g, RVector::NullaryExpr(256, [&](Eigen::Index i) { return lin.V(g.x(static_cast<std::size_t>(i))); })};
  double dt = 0.01;
  auto dense = to_dense(s);
  auto lin_rho = projector(f);
  for (int n = 0; n < 100; ++n) {
    s = tdhf_step(s, dt);
    f = schrodinger_step(f, dt, vf);
    lin_rho = conjugate_step(lin_rho, dt, vf);
  }
  CHECK((s.orbitals[0].values - f.values).cwiseAbs().maxCoeff() < 1e-6);
  dense = tdhf_evolve(dense, 1.0, dt, 10);
  CHECK(trace_norm(linear_combination(1.0, dense.density(), -1.0, lin_rho)) < 1e-6);

  // free spreading of a coherent state
  PotentialSpec none;
  auto c = make_state({coherent_state({0.2, 0.5}, h, g)}, {1.0}, none);
  c = tdhf_evolve(c, 1.5, 0.01);
  double var = h / 2 + 4 * 1.5 * 1.5 * h / 2;
  CHECK(std::abs(position_variance(c.orbitals[0]) - var) < 1e-3 * var);
}

TEST_CASE("TDHF with interaction") {
  auto g = default_grid();
  double h = 0.2;
  auto orbs = orthonormal_orbitals(g, h);
  auto s = make_state(orbs, {0.5, 0.3, 0.2}, interacting());
  auto d = to_dense(s);
  RVector spec0 = singular_values(d.density());
  double E0 = tdhf_energy(s);
  StepDiagnostics diag;
  for (int n = 0; n < 100; ++n) {
    s = tdhf_step(s, 0.01, &diag);
    CHECK(diag.orthonormality_defect < 1e-10);
    d = tdhf_step(d, 0.01, &diag);
    CHECK(diag.trace_defect < 1e-6);
    CHECK(diag.hermitian_defect < 1e-10);
    CHECK(diag.min_eigenvalue > -1e-8);
  }
  // orbital and dense paths agree
  CHECK(trace_norm(linear_combination(1.0, s.density(), -1.0, d.density())) < 1e-8);
  RVector spec1 = singular_values(d.density());
  CHECK((spec1.head(3) - spec0.head(3)).cwiseAbs().maxCoeff() < 1e-6);
  MESSAGE("energy drift over t = 1: " << tdhf_energy(s) - E0);

  // factorization round trip
  auto back = make_state(d.density(), interacting());
  CHECK(back.factorized());
  CHECK(back.orbitals.size() == 3);
  CHECK(trace_norm(linear_combination(1.0, back.density(), -1.0, d.density())) < 1e-8);

  // second-order splitting: defect against a dt/16 reference
  auto s0 = make_state(orbs, {0.5, 0.3, 0.2}, interacting());
  auto ref = tdhf_evolve(s0, 0.5, 0.05 / 16).density();
  double e1 = trace_norm(linear_combination(1.0, tdhf_evolve(s0, 0.5, 0.05).density(), -1.0, ref));
  double e2 = trace_norm(linear_combination(1.0, tdhf_evolve(s0, 0.5, 0.025).density(), -1.0, ref));
  MESSAGE("splitting defects " << e1 << " " << e2 << " ratio " << e1 / e2);
  CHECK(e1 / e2 >= 3.5);
  CHECK(e1 / e2 <= 4.5);
}

TEST_CASE("Husimi density") {
  auto g = default_grid();
  double h = 0.2;
  PhaseGrid pg(-4, 4, -4, 4, 96, 96);
  PhasePoint X0{0.3, -0.5};
  auto u = husimi_density(projector(coherent_state(X0, h, g)), pg);
  CHECK(std::abs(u.mass() - 1.0) < 1e-4);
  double peak = 1 / (2 * kPi * h), worst = 0;
  for (std::size_t i = 0; i < pg.nx(); ++i)
    for (std::size_t j = 0; j < pg.nxi(); ++j) {
      double e = peak * std::exp(-norm2(PhasePoint{pg.x(i), pg.xi(j)} - X0) / (2 * h));
      worst = std::max(worst, std::abs(u.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - e));
    }
  CHECK(worst < 1e-4 * peak);

  auto s = make_state(orthonormal_orbitals(g, h), {0.5, 0.3, 0.2}, PotentialSpec{});
  auto us = husimi_density(s, pg);
  auto ud = husimi_density(s.density(), pg);
  CHECK((us.values - ud.values).cwiseAbs().maxCoeff() < 1e-10 * peak);
  CHECK(std::abs(us.mass() - 1.0) < 1e-4);
  CHECK(us.values.minCoeff() >= -1e-10);

  PhaseGrid wide(-7.9, 7.9, -4, 4, 64, 64);
  CHECK_THROWS_AS(husimi_density(s, wide), Error);
}
