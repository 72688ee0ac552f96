#include <cmath>
#include <random>

#include "pslab/experiments.hpp"
#include "pslab/classical_dynamics.hpp"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"
#include "pslab/quantum_dynamics.hpp"
#include "pslab/wick_calculus.hpp"

namespace pslab {

namespace {

double linf(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

Symbol gaussian(const PhaseGrid& pg, PhasePoint c, double width) {
  return sample_symbol(pg, [&](double x, double xi) {
    return cplx(std::exp(-((x - c.x) * (x - c.x) + (xi - c.xi) * (xi - c.xi)) / (width * width)));
  });
}

// kernel of the phase-space reflection about Y, for 2y on the grid
QuantumOperator reflection(const PositionGrid& g, double h, PhasePoint Y) {
  auto n = static_cast<Eigen::Index>(g.size());
  CMatrix k = CMatrix::Zero(n, n);
  long r = std::lround(2.0 * (Y.x - g.x_min()) / g.dx());
  for (long i = 0; i < n; ++i) {
    long j = r - i;
    if (j >= 0 && j < n)
      k(i, j) = std::polar(1.0, 2.0 * (g.x(static_cast<std::size_t>(i)) - Y.x) * Y.xi / h) / g.dx();
  }
  return QuantumOperator{g, h, k, false};
}

QuantumOperator random_mixture(const PositionGrid& g, double h, unsigned seed, int rank) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.8);
  std::uniform_real_distribution<double> ud(0.1, 1.0);
  std::vector<WaveFunction> fs;
  std::vector<double> w;
  for (int k = 0; k < rank; ++k) {
    fs.push_back(coherent_state({nd(rng), nd(rng)}, h, g));
    w.push_back(ud(rng));
  }
  return mixture(fs, w);
}

std::vector<WaveFunction> orbitals(const PositionGrid& g, double h) {
  std::vector<WaveFunction> out;
  for (PhasePoint X : {PhasePoint{-0.8, 0.3}, PhasePoint{0.5, -0.4}, PhasePoint{0.2, 0.9}}) {
    auto f = coherent_state(X, h, g);
    for (const auto& e : out) f.values -= inner(f, e) * e.values;
    f.values /= f.norm();
    out.push_back(f);
  }
  return out;
}

std::vector<MeanFieldState> trajectory(MeanFieldState s, double dt, int steps) {
  std::vector<MeanFieldState> out{s};
  for (int k = 0; k < steps; ++k) {
    s = tdhf_step(s, dt);
    out.push_back(s);
  }
  return out;
}

PotentialField sampled(const Potential& V, const PositionGrid& g) {
  PotentialField f{g, RVector(static_cast<Eigen::Index>(g.size()))};
  for (std::size_t i = 0; i < g.size(); ++i) f.values(static_cast<Eigen::Index>(i)) = V(g.x(i));
  return f;
}

}  // namespace

std::vector<Check> suite_symbol_calculus() {
  std::vector<Check> out;
  PositionGrid g(-8.0, 8.0, 256);

  double overlap = 0.0;
  PhasePoint X{0.7, -0.4}, Y{-0.5, 0.9};
  for (double h : {0.4, 0.2, 0.1})
    overlap = std::max(overlap, std::abs(inner(coherent_state(X, h, g), coherent_state(Y, h, g)) -
                                         coherent_overlap(X, Y, h)));
  out.push_back(check_le("coherent_overlap_closed_form", overlap, 1e-6));

  {
    double h = 0.5;
    PhaseGrid pg(-2.5, 2.5, -3, 3, 40, 48);
    PhasePoint c{0.5, 0.3};
    auto ws = wick_symbol_direct(reflection(g, h, c), pg);
    auto ex = sample_symbol(pg, [&](double x, double xi) { return cplx(std::exp(-norm2(PhasePoint{x, xi} - c) / h)); });
    out.push_back(check_le("reflection_wick_symbol", linf(ws.values - ex.values), 1e-6));

    PhaseGrid wide(-7, 7, -7, 7, 112, 112);
    auto a = coherent_state({0, 0}, h, g);
    auto b = coherent_state({2, 0}, h, g);
    WaveFunction f{g, h, a.values + b.values};
    f.values /= f.norm();
    double roi = std::max(std::abs(resolution_of_identity(a, h, wide) - 1.0),
                          std::abs(resolution_of_identity(f, h, wide) - 1.0));
    out.push_back(check_le("resolution_of_identity", roi, 0.01));
  }

  double cross = 0.0;
  for (double h : {0.5, 0.2}) {
    auto A = random_mixture(g, h, 11, 5);
    auto via = wick_symbol_via_weyl(A);
    double scale = 0.0, worst = 0.0;
    std::vector<PhasePoint> pts;
    std::vector<cplx> ref;
    for (std::size_t i = 0; i < via.pg.nx(); ++i)
      for (std::size_t j = 0; j < via.pg.nxi(); ++j) {
        double x = via.pg.x(i), xi = via.pg.xi(j);
        if (std::abs(x) > 2.5 || std::abs(xi) > 3) continue;
        pts.push_back({x, xi});
        ref.push_back(via.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    auto direct = wick_symbol_at(A, pts);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      worst = std::max(worst, std::abs(direct[k] - ref[k]));
      scale = std::max(scale, std::abs(direct[k]));
    }
    cross = std::max(cross, worst / scale);
  }
  out.push_back(check_le("wick_equals_heat_of_weyl", cross, 1e-4));

  double pairing = 0.0;
  for (double h : {0.4, 0.2, 0.1}) {
    PositionGrid gg(-8, 8, h < 0.15 ? 512 : 256);
    PhaseGrid p(-6, 6, -6, 6, 192, 192);
    PhasePoint a{0.3, -0.2}, b{-0.4, 0.5};
    double w = 1.0, v = 0.8, s = w * w + v * v;
    auto A = weyl_quantize(gaussian(p, a, w), gg, h);
    auto B = weyl_quantize(gaussian(p, b, v), gg, h);
    double expected = kPi * w * w * v * v / s * std::exp(-norm2(a - b) / s) / (2 * kPi * h);
    pairing = std::max(pairing, std::abs(trace(compose(A, B)).real() - expected) / expected);
  }
  out.push_back(check_le("trace_pairing_rel", pairing, 1e-4));
  return out;
}

std::vector<Check> suite_smoothing() {
  std::vector<Check> out;
  PositionGrid g(-8.0, 8.0, 256);
  double contraction = -1e300, ident = 0.0, wick_id = 0.0, weyl_id = 0.0;
  for (double h : {0.4, 0.2}) {
    auto I = identity_operator(g, h);
    ident = std::max(ident, linf(smooth_Th(I).kernel - I.kernel) * g.dx());
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    auto n = static_cast<Eigen::Index>(g.size());
    CMatrix k(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) k(i, j) = cplx(nd(rng), nd(rng));
    QuantumOperator R{g, h, k, false};
    contraction = std::max(contraction, op_norm(smooth_Th(R)) - op_norm(R));

    auto A = random_mixture(g, h, 5, 3);
    auto T = smooth_Th(A);
    wick_id = std::max(wick_id, linf(wick_symbol_via_weyl(T).values - heat_smooth(wick_symbol_via_weyl(A), h).values));
    weyl_id = std::max(weyl_id, linf(weyl_symbol(T, true).values - wick_symbol_direct(A, weyl_phase_grid(g, h), true).values));
  }
  out.push_back(check_le("Th_contraction_excess", contraction, 1e-8));
  out.push_back(check_le("Th_identity_fixed", ident, 1e-8));
  out.push_back(check_le("Th_wick_heat_identity", wick_id, 1e-4));
  out.push_back(check_le("Th_weyl_equals_wick", weyl_id, 1e-4));

  std::vector<double> c;
  for (double h : {0.5, 0.25, 0.125}) {
    auto A = projector(coherent_state({0.3, -0.2}, h, g));
    double gap = op_norm(linear_combination(1.0, A, -1.0, smooth_Th(A)));
    c.push_back(gap / (std::sqrt(h) * regularity(A).i_inf));
  }
  double mean = (c[0] + c[1] + c[2]) / 3.0, dev = 0.0;
  for (double v : c) dev = std::max(dev, std::abs(v - mean) / mean);
  out.push_back(check_le("Th_commutator_constant_spread", dev, 0.25));
  return out;
}

std::vector<Check> suite_wick_pde() {
  std::vector<Check> out;
  {
    std::vector<double> res;
    for (std::size_t r : {1u, 2u}) {
      const double h = 0.2;
      PositionGrid g(-8.0, 8.0, 256 * r);
      PhaseGrid pg(-4.0, 4.0, -4.0, 4.0, 64 * r, 64 * r);
      MeanFieldState s = make_state(projector(coherent_state({0.3, 0.5}, h, g)), PotentialSpec{});
      PdeResidual p = pde_residual(trajectory(s, 0.02 / static_cast<double>(r), 2), pg);
      res.push_back(p.residual[0].l1());
    }
    out.push_back(check_ge("pde_residual_halving_factor", res[0] / res[1], 1.8));
  }
  {
    const double h = 0.2;
    PositionGrid g(-8.0, 8.0, 256);
    PhaseGrid pg(-4.0, 4.0, -4.0, 4.0, 80, 80);
    PotentialSpec pot{potential_from_name("cosine", 1.0, 1.0), potential_from_name("gaussian", 0.5, 1.0)};
    auto rho = mixture({coherent_state({0.3, 0.5}, h, g), coherent_state({-0.5, -0.2}, h, g)}, {0.6, 0.4});
    PdeResidual p = pde_residual(trajectory(make_state(rho, pot), 1e-3, 2), pg);
    out.push_back(check_le("pde_rhs_integral", std::abs(p.rhs[0].integral()), 1e-8));
    out.push_back(check_le("pde_residual_rel_interacting", p.residual[0].l1() / p.rhs[0].l1(), 1e-4));
  }
  {
    std::vector<double> hs{0.1, 0.05, 0.025}, t3;
    PotentialSpec pot{potential_from_name("cosine", 1.0, 1.0), potential_from_name("gaussian", 0.5, 2.0)};
    PhaseGrid pg(-1.5, 4.5, -3.5, 3.5, 120, 140);
    for (double h : hs) {
      std::size_t n = 8;
      while (kAliasFraction * kPi * h * static_cast<double>(n) / 14.0 < 3.5) n *= 2;
      PositionGrid g(-5.0, 9.0, n);
      auto traj = trajectory(make_state(projector(coherent_state({1.5, 0.4}, h, g)), pot), 1e-3, 2);
      t3.push_back(wick_truncation_residual(traj, pg, 3)[0].l1());
    }
    out.push_back(check_in("truncation_slope_m3", fit_slope(hs, t3).slope, 0.35, 0.65));
  }
  return out;
}

std::vector<Check> suite_propagators() {
  std::vector<Check> out;
  PositionGrid g(-8.0, 8.0, 256);
  {
    double h = 0.1, worst = 0.0;
    PotentialField vf = sampled(potential_from_name("cosine", 1.0, 1.0), g);
    auto f = coherent_state({0.0, 0.8}, h, g);
    for (int n = 0; n < 200; ++n) {
      f = schrodinger_step(f, 0.01, vf);
      worst = std::max(worst, std::abs(f.norm() - 1.0));
    }
    out.push_back(check_le("schrodinger_norm_drift", worst, 1e-10));
  }
  {
    double h = 0.2;
    PotentialSpec pot{potential_from_name("cosine", 0.5, 1.0), potential_from_name("gaussian", 0.8, 1.0)};
    auto orbs = orbitals(g, h);
    auto s = make_state(orbs, {0.5, 0.3, 0.2}, pot);
    auto d = to_dense(s);
    RVector spec0 = singular_values(d.density());
    double orth = 0.0, tr = 0.0, herm = 0.0, min_eig = 1e300;
    StepDiagnostics diag;
    for (int n = 0; n < 100; ++n) {
      s = tdhf_step(s, 0.01, &diag);
      orth = std::max(orth, diag.orthonormality_defect);
      d = tdhf_step(d, 0.01, &diag);
      tr = std::max(tr, diag.trace_defect);
      herm = std::max(herm, diag.hermitian_defect);
      min_eig = std::min(min_eig, diag.min_eigenvalue);
    }
    RVector spec1 = singular_values(d.density());
    out.push_back(check_le("tdhf_orthonormality_defect", orth, 1e-10));
    out.push_back(check_le("tdhf_trace_defect", tr, 1e-6));
    out.push_back(check_le("tdhf_hermitian_defect", herm, 1e-10));
    out.push_back(check_ge("tdhf_min_eigenvalue", min_eig, -1e-8));
    out.push_back(check_le("tdhf_occupation_drift", (spec1.head(3) - spec0.head(3)).cwiseAbs().maxCoeff(), 1e-6));
    out.push_back(check_le("tdhf_orbital_vs_dense",
                           trace_norm(linear_combination(1.0, s.density(), -1.0, d.density())), 1e-8));

    auto s0 = make_state(orbs, {0.5, 0.3, 0.2}, pot);
    auto ref = tdhf_evolve(s0, 0.5, 0.05 / 16).density();
    double e1 = trace_norm(linear_combination(1.0, tdhf_evolve(s0, 0.5, 0.05).density(), -1.0, ref));
    double e2 = trace_norm(linear_combination(1.0, tdhf_evolve(s0, 0.5, 0.025).density(), -1.0, ref));
    out.push_back(check_in("tdhf_dt_halving_ratio", e1 / e2, 3.5, 4.5));
  }
  {
    double h = 0.1;
    PotentialSpec lin{potential_from_name("cosine", 0.5, 1.0), Potential{}};
    auto f = coherent_state({0.4, -0.3}, h, g);
    auto dense = to_dense(make_state({f}, {1.0}, lin));
    auto rho = projector(f);
    PotentialField vf = sampled(lin.V, g);
    for (int n = 0; n < 100; ++n) rho = conjugate_step(rho, 0.01, vf);
    dense = tdhf_evolve(dense, 1.0, 0.01, 10);
    out.push_back(check_le("tdhf_W0_reduction", trace_norm(linear_combination(1.0, dense.density(), -1.0, rho)), 1e-6));
  }
  {
    // classical side: Verlet energy and Vlasov mass
    auto V = potential_from_name("cosine", 1.0, 1.0);
    PhasePoint X0{0.3, 0.8};
    double e0 = hamiltonian(X0, V);
    double drift = std::abs(hamiltonian(hamiltonian_flow(X0, 5.0, V, 1e-3), V) - e0) / std::abs(e0);
    out.push_back(check_le("verlet_energy_drift_rel", drift, 1e-5));

    PhaseGrid pg(-8, 8, -5, 5, 160, 100);
    PhaseDistribution v(pg);
    for (std::size_t i = 0; i < pg.nx(); ++i)
      for (std::size_t j = 0; j < pg.nxi(); ++j)
        v.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::exp(-(pg.x(i) * pg.x(i) + pg.xi(j) * pg.xi(j)) / 2.0) / (2.0 * kPi);
    PotentialSpec pot{V, potential_from_name("gaussian", 1.0, 1.0)};
    double m0 = v.mass();
    for (int n = 0; n < 100; ++n) v = vlasov_step(v, 0.01, pot);
    out.push_back(check_le("vlasov_mass_drift_rel", std::abs(v.mass() - m0) / m0, 1e-3));
  }
  return out;
}

SweepResult run_selftest() {
  SweepResult r;
  r.scenario = "selftest";
  std::vector<std::pair<std::string, std::vector<Check> (*)()>> suites{{"symbol_calculus", suite_symbol_calculus},
                                                                        {"smoothing", suite_smoothing},
                                                                        {"wick_pde", suite_wick_pde},
                                                                        {"propagators", suite_propagators}};
  for (const auto& [name, fn] : suites) {
    for (Check c : fn()) {
      c.name = name + "." + c.name;
      r.rows.push_back({0.0, 0.0, c.name, c.value, 0.0});
      r.checks.push_back(c);
    }
  }
  return r;
}

}  // namespace pslab
