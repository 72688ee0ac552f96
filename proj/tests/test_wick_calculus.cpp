#include <cmath>
#include <random>

#include "doctest.h"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"
#include "pslab/wick_calculus.hpp"

using namespace pslab;

namespace {

Symbol gaussian_symbol(const PhaseGrid& pg, double width) {
  return sample_symbol(pg, [&](double x, double xi) { return cplx(std::exp(-(x * x + xi * xi) / (width * width))); });
}

// smallest power-of-two grid on [lo, hi) whose guarded momentum range reaches xi
PositionGrid grid_reaching(double lo, double hi, double h, double xi) {
  std::size_t n = 8;
  while (kAliasFraction * kPi * h * static_cast<double>(n) / (hi - lo) < xi) n *= 2;
  return PositionGrid(lo, hi, n);
}

double loglog_slope(const std::vector<double>& hs, const std::vector<double>& ys) {
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    mx += std::log(hs[k]);
    my += std::log(ys[k]);
  }
  mx /= static_cast<double>(hs.size());
  my /= static_cast<double>(hs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < hs.size(); ++k) {
    sxy += (std::log(hs[k]) - mx) * (std::log(ys[k]) - my);
    sxx += (std::log(hs[k]) - mx) * (std::log(hs[k]) - mx);
  }
  return sxy / sxx;
}

std::vector<MeanFieldState> trajectory(MeanFieldState s, double dt, int steps) {
  std::vector<MeanFieldState> out{s};
  for (int k = 0; k < steps; ++k) {
    s = tdhf_step(s, dt);
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("bi-Wick function") {
  const double h = 0.3;
  PositionGrid g(-8.0, 8.0, 256);
  QuantumOperator A = weyl_quantize(gaussian_symbol(weyl_phase_grid(g, h), 1.2), g, h);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);

  SUBCASE("diagonal is the Wick symbol") {
    std::vector<PhasePoint> pts;
    for (int k = 0; k < 20; ++k) pts.push_back({u(rng), u(rng)});
    auto w = wick_symbol_at(A, pts);
    for (std::size_t k = 0; k < pts.size(); ++k) CHECK(std::abs(bi_wick_eval(A, pts[k], pts[k]) - w[k]) <= 1e-8);
  }

  SUBCASE("growth bound") {
    double op = op_norm(A);
    int tested = 0;
    for (int k = 0; k < 200; ++k) {
      PhasePoint X{u(rng), u(rng)}, Y{u(rng), u(rng)};
      double d2 = norm2(X - Y);
      if (d2 > kBiWickClamp * h) continue;
      ++tested;
      CHECK(std::abs(bi_wick_eval(A, X, Y)) <= std::exp(d2 / (4.0 * h)) * op * (1.0 + 1e-9));
    }
    CHECK(tested > 100);
  }

  SUBCASE("rank-one closed form") {
    PhasePoint Z{0.4, -0.3};
    QuantumOperator P = projector(coherent_state(Z, h, g));
    for (int k = 0; k < 20; ++k) {
      PhasePoint X{u(rng), u(rng)}, Y{u(rng), u(rng)};
      cplx expect = coherent_overlap(Z, Y, h) * coherent_overlap(X, Z, h) / coherent_overlap(X, Y, h);
      CHECK(std::abs(bi_wick_eval(P, X, Y) - expect) <= 1e-6 * std::max(1.0, std::abs(expect)));
    }
  }

  SUBCASE("holomorphic in the first slot") {
    PhasePoint Y{0.2, -0.1};
    PhaseGrid patch(-0.8, 1.2, -1.1, 0.9, 40, 40);
    Symbol S = sample_symbol(patch, [&](double x, double xi) { return bi_wick_eval(A, {x, xi}, Y); });
    Symbol dbar = wirtinger(S, 1, true, DerivativeMethod::stencil);
    CHECK(dbar.linf() <= 1e-4 * S.linf());
    CHECK(wirtinger(S, 1, false, DerivativeMethod::stencil).linf() > 1e-2 * S.linf());
  }

  SUBCASE("underflow is reported") {
    CHECK_THROWS_AS(bi_wick_eval(A, {-7.0, 0.0}, {7.0, 30.0}), Error);
  }
}

TEST_CASE("Wirtinger derivatives") {
  PhaseGrid pg(-2.0, 2.0, -2.0, 2.0, 32, 32);
  Symbol x = sample_symbol(pg, [](double a, double) { return cplx(a); });
  Symbol xi = sample_symbol(pg, [](double, double b) { return cplx(b); });
  auto all_equal = [](const Symbol& s, cplx v) { return (s.values.array() - v).abs().maxCoeff() <= 1e-12; };
  CHECK(all_equal(wirtinger(x, 1, false), 0.5));
  CHECK(all_equal(wirtinger(x, 1, true), 0.5));
  CHECK(all_equal(wirtinger(xi, 1, false), cplx(0.0, -0.5)));
  CHECK(all_equal(wirtinger(xi, 1, true), cplx(0.0, 0.5)));

  Symbol z = sample_symbol(pg, [](double a, double b) { return cplx(a, b); });
  CHECK(all_equal(wirtinger(z, 1, true), 0.0));
  CHECK(all_equal(wirtinger(z, 1, false), 1.0));

  // quartic polynomials are differentiated exactly by the stencils
  Symbol q = sample_symbol(pg, [](double a, double b) { return cplx(a * a * a * b, a * b * b); });
  Symbol qx = partial_derivative(q, 1, 0);
  Symbol ref = sample_symbol(pg, [](double a, double b) { return cplx(3 * a * a * b, b * b); });
  CHECK((qx.values - ref.values).cwiseAbs().maxCoeff() <= 1e-9);

  PhaseGrid wide(-8.0, 8.0, -8.0, 8.0, 128, 128);
  Symbol G = sample_symbol(wide, [](double a, double b) {
    return cplx(std::exp(-((a - 0.3) * (a - 0.3) + b * b) / 1.5), 0.0);
  });
  Symbol ddbar = wirtinger(wirtinger(G, 1, true), 1, false);
  Symbol lap = partial_derivative(G, 2, 0, DerivativeMethod::spectral);
  lap.values += partial_derivative(G, 0, 2, DerivativeMethod::spectral).values;
  CHECK((ddbar.values - 0.25 * lap.values).cwiseAbs().maxCoeff() <= 1e-6);

  // closed form second derivative of the Gaussian
  Symbol gxx = sample_symbol(wide, [](double a, double b) {
    double s = (a - 0.3) / 1.5;
    return cplx((4.0 * s * s - 2.0 / 1.5) * std::exp(-((a - 0.3) * (a - 0.3) + b * b) / 1.5), 0.0);
  });
  CHECK((partial_derivative(G, 2, 0).values - gxx.values).cwiseAbs().maxCoeff() <= 1e-9);

  CHECK_THROWS_AS(wirtinger(x, 1, false, DerivativeMethod::spectral), Error);
  CHECK_THROWS_AS(wirtinger(x, -1, false), Error);
}

TEST_CASE("Wick composition expansion") {
  const double h = 0.2;
  PositionGrid g(-8.0, 8.0, 256);
  PhaseGrid pg(-4.0, 4.0, -3.5, 3.5, 80, 70);
  QuantumOperator B = projector(coherent_state({0.5, 0.3}, h, g));

  SUBCASE("identity on the left") {
    Symbol e = wick_compose_expand(identity_operator(g, h), B, 4, pg);
    CHECK((e.values - wick_symbol_direct(B, pg).values).cwiseAbs().maxCoeff() <= 1e-10);
  }

  SUBCASE("position operator is exact at second order") {
    QuantumOperator Q = position_operator(h, g);
    Symbol exact = wick_symbol_direct(compose(Q, B), pg);
    Symbol sB = wick_symbol_direct(B, pg);
    Symbol dbar = wirtinger(sB, 1, true);
    Symbol oracle = sB;
    for (std::size_t i = 0; i < pg.nx(); ++i) oracle.values.row(static_cast<Eigen::Index>(i)) *= pg.x(i);
    oracle.values += h * dbar.values;
    CHECK((exact.values - oracle.values).cwiseAbs().maxCoeff() <= 1e-6);
    Symbol e2 = wick_compose_expand(Q, B, 2, pg);
    CHECK((exact.values - e2.values).cwiseAbs().maxCoeff() <= 1e-6);
  }

  SUBCASE("mass identity") {
    QuantumOperator A = weyl_quantize(gaussian_symbol(weyl_phase_grid(g, h), 1.0), g, h);
    QuantumOperator AB = compose(A, B);
    cplx mass = wick_symbol_direct(AB, pg).integral() / (2.0 * kPi * h);
    cplx tr = trace(AB);
    CHECK(std::abs(mass - tr) <= 1e-6 * std::abs(tr));
  }

  SUBCASE("successive partial sums shrink with h") {
    std::vector<double> hs{0.1, 0.05}, diffs;
    for (double hh : hs) {
      PositionGrid gg = grid_reaching(-9.0, 9.0, hh, 4.0);
      QuantumOperator A = weyl_quantize(gaussian_symbol(weyl_phase_grid(gg, hh), 1.0), gg, hh);
      QuantumOperator Bh = projector(coherent_state({0.55, 0.3}, hh, gg));
      PhaseGrid p(-4.0, 4.0, -4.0, 4.0, 80, 80);
      Symbol d = wick_compose_expand(A, Bh, 3, p);
      d.values -= wick_compose_expand(A, Bh, 2, p).values;
      diffs.push_back(d.l1() / (2.0 * kPi * hh));
    }
    // the m = 2 term is of order h
    double s = loglog_slope(hs, diffs);
    CHECK(s > 0.8);
    CHECK(s < 1.2);
  }

  CHECK(remainder_orders(1) == std::vector<int>{1, 2});
  CHECK(remainder_orders(2) == std::vector<int>{2});
  CHECK(remainder_orders(3) == std::vector<int>{3});
}

TEST_CASE("composition remainder") {
  const double h = 0.2;
  PositionGrid g(-8.0, 8.0, 256);
  PhaseGrid pg(-4.0, 4.0, -3.5, 3.5, 80, 70);
  PhaseGrid wpg = weyl_phase_grid(g, h);
  QuantumOperator B = projector(coherent_state({0.5, 0.3}, h, g));

  SUBCASE("constant symbol") {
    Symbol F = sample_symbol(wpg, [](double, double) { return cplx(1.7); });
    for (int m : {1, 2, 3}) {
      auto r = composition_remainder(F, B, m, pg);
      CHECK(r.R.linf() <= 1e-8);
      CHECK(r.bound_rhs == doctest::Approx(0.0));
    }
  }

  SUBCASE("polynomial symbols") {
    Symbol F = sample_symbol(wpg, [](double x, double) { return cplx(x); });
    auto r = composition_remainder(F, B, 2, pg);
    CHECK(r.R.linf() <= 1e-6 * wick_symbol_direct(B, pg).linf());
    Symbol F2 = sample_symbol(wpg, [](double x, double) { return cplx(x * x - 0.5 * x); });
    auto r2 = composition_remainder(F2, B, 3, pg);
    CHECK(r2.R.linf() <= 1e-6 * wick_symbol_direct(B, pg).linf());
    // second order does not capture the quadratic
    CHECK(composition_remainder(F2, B, 2, pg).R.linf() > 1e-3);
  }

  SUBCASE("remainder scaling") {
    std::vector<double> hs{0.2, 0.1, 0.05}, l1_2, l1_3, rhs_2;
    PhaseGrid p(-5.0, 5.0, -5.0, 5.0, 100, 100);
    for (double hh : hs) {
      PositionGrid gg = grid_reaching(-10.0, 10.0, hh, 5.0);
      Symbol F = gaussian_symbol(weyl_phase_grid(gg, hh), 1.0);
      QuantumOperator Bh = projector(coherent_state({0.55, 0.3}, hh, gg));
      auto r2 = composition_remainder(F, Bh, 2, p);
      auto r3 = composition_remainder(F, Bh, 3, p);
      l1_2.push_back(r2.l1);
      l1_3.push_back(r3.l1);
      rhs_2.push_back(r2.bound_rhs);
      CHECK(r3.l1 < r2.l1);
    }
    double s2 = loglog_slope(hs, l1_2), s3 = loglog_slope(hs, l1_3);
    MESSAGE("remainder slopes " << s2 << " " << s3);
    CHECK(s2 >= 0.85);
    CHECK(s2 <= 1.15);
    CHECK(s3 >= 1.35);
    CHECK(s3 <= 1.65);
    CHECK(loglog_slope(hs, rhs_2) == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("Wick symbol evolution") {
  SUBCASE("free flow residual converges") {
    std::vector<double> res;
    for (int r : {1, 2}) {
      const double h = 0.2;
      PositionGrid g(-8.0, 8.0, 256 * static_cast<std::size_t>(r));
      PhaseGrid pg(-4.0, 4.0, -4.0, 4.0, 64 * static_cast<std::size_t>(r), 64 * static_cast<std::size_t>(r));
      MeanFieldState s = make_state(projector(coherent_state({0.3, 0.5}, h, g)), PotentialSpec{});
      PdeResidual p = pde_residual(trajectory(s, 0.02 / r, 2), pg);
      REQUIRE(p.times.size() == 1);
      CHECK(p.rhs[0].linf() == 0.0);
      res.push_back(p.residual[0].l1());
    }
    CHECK(res[0] / res[1] >= 1.8);
  }

  SUBCASE("interacting residual and commutator trace") {
    const double h = 0.2;
    PositionGrid g(-8.0, 8.0, 256);
    PhaseGrid pg(-4.0, 4.0, -4.0, 4.0, 80, 80);
    PotentialSpec pot{potential_from_name("cosine", 1.0, 1.0), potential_from_name("gaussian", 0.5, 1.0)};
    QuantumOperator rho =
        mixture({coherent_state({0.3, 0.5}, h, g), coherent_state({-0.5, -0.2}, h, g)}, {0.6, 0.4});
    PdeResidual p = pde_residual(trajectory(make_state(rho, pot), 1e-3, 2), pg);
    CHECK(std::abs(p.rhs[0].integral()) <= 1e-8);
    CHECK(p.residual[0].l1() <= 1e-4 * p.rhs[0].l1());
  }

  SUBCASE("truncated mean-field expansion") {
    std::vector<double> hs{0.1, 0.05, 0.025}, t2, t3;
    PotentialSpec pot{potential_from_name("cosine", 1.0, 1.0), potential_from_name("gaussian", 0.5, 2.0)};
    PhaseGrid pg(-1.5, 4.5, -3.5, 3.5, 120, 140);
    for (double h : hs) {
      PositionGrid g = grid_reaching(-5.0, 9.0, h, 3.5);
      auto traj = trajectory(make_state(projector(coherent_state({1.5, 0.4}, h, g)), pot), 1e-3, 2);
      t2.push_back(wick_truncation_residual(traj, pg, 2)[0].l1());
      t3.push_back(wick_truncation_residual(traj, pg, 3)[0].l1());
    }
    double s3 = loglog_slope(hs, t3);
    MESSAGE("truncation slope m=3 " << s3);
    CHECK(s3 >= 0.35);
    CHECK(s3 <= 0.65);
    // m = 2 stays of order one
    CHECK(std::abs(loglog_slope(hs, t2)) < 0.25);
  }

  SUBCASE("sampling errors") {
    const double h = 0.2;
    PositionGrid g(-8.0, 8.0, 256);
    PhaseGrid pg(-4.0, 4.0, -4.0, 4.0, 64, 64);
    auto traj = trajectory(make_state(projector(coherent_state({0.0, 0.0}, h, g)), PotentialSpec{}), 0.01, 2);
    CHECK_THROWS_AS(pde_residual({traj[0], traj[1]}, pg), Error);
    auto uneven = traj;
    uneven[2].t += 0.003;
    CHECK_THROWS_AS(pde_residual(uneven, pg), Error);
  }
}
