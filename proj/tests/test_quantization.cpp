#include <cmath>
#include <random>

#include "doctest.h"
#include "pslab/operator_core.hpp"
#include "pslab/phase_space.hpp"
#include "pslab/quantization.hpp"

using namespace pslab;

namespace {

PositionGrid default_grid() { return PositionGrid(-8.0, 8.0, 256); }

double linf(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

Symbol gaussian_symbol(const PhaseGrid& pg, PhasePoint c, double width) {
  return sample_symbol(pg, [&](double x, double xi) {
    return cplx(std::exp(-((x - c.x) * (x - c.x) + (xi - c.xi) * (xi - c.xi)) / (width * width)));
  });
}

QuantumOperator symmetry_operator(const PositionGrid& g, double h, PhasePoint Y) {
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

QuantumOperator random_hermitian(const PositionGrid& g, double h, unsigned seed, int rank) {
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

}  // namespace

TEST_CASE("Weyl quantization") {
  auto g = default_grid();
  double h = 0.5;
  auto pg = natural_phase_grid(g, h);

  auto one = weyl_quantize(sample_symbol(pg, [](double, double) { return cplx(1.0); }), g, h);
  CHECK(linf(one.kernel - identity_operator(g, h).kernel) * g.dx() < 1e-8);

  auto q = weyl_quantize(sample_symbol(pg, [](double x, double) { return cplx(x); }), g, h);
  CHECK(linf(q.kernel - position_operator(h, g).kernel) * g.dx() < 1e-8);

  for (double hh : {0.4, 0.2, 0.1}) {
    PhaseGrid p(-6, 6, -6, 6, 192, 192);
    PositionGrid gg(-8, 8, hh < 0.15 ? 512 : 256);
    auto F = gaussian_symbol(p, {0.3, -0.2}, 1.0);
    auto A = weyl_quantize(F, gg, hh);
    double expected = kPi / (2 * kPi * hh);
    CHECK(std::abs(trace(A).real() - expected) < 1e-4 * expected);
  }

  SUBCASE("guards") {
    PhaseGrid wide(-6, 6, -30, 30, 64, 64);
    CHECK_THROWS_AS(weyl_quantize(gaussian_symbol(wide, {0, 0}, 1.0), g, 0.1), Error);
    PhaseGrid p(-6, 6, -6, 6, 64, 64);
    CHECK_THROWS_AS(weyl_quantize(sample_symbol(p, [](double x, double) { return cplx(x); }), g, h),
                    Error);
  }
}

TEST_CASE("Weyl symbol extraction") {
  auto g = default_grid();
  double h = 0.5;
  auto I = identity_operator(g, h);
  CHECK(linf(weyl_symbol(I).values - CMatrix::Ones(512, 256)) < 1e-10);

  auto proj = projector(coherent_state({0, 0}, h, g));
  auto s = weyl_symbol(proj);
  auto expect = sample_symbol(s.pg, [&](double x, double xi) { return cplx(2 * std::exp(-(x * x + xi * xi) / h)); });
  CHECK(linf(s.values - expect.values) < 1e-10);
  for (PhasePoint X : {PhasePoint{0, 0}, PhasePoint{0.5, 0.3}, PhasePoint{-0.3125, -0.7}, PhasePoint{0.41, 0.2}}) {
    cplx refl = weyl_symbol_by_reflection(proj, X);
    CHECK(std::abs(refl - 2.0 * std::exp(-norm2(X) / h)) < 1e-4);
  }
  // the reflection formula carries no extra (2 pi h) factor
  CHECK(std::abs(weyl_symbol_by_reflection(proj, {0, 0}) - 2.0) < 1e-10);

  // x nodes on every midpoint so no interpolation enters the round trip
  auto wpg = weyl_phase_grid(g, h);
  auto F = gaussian_symbol(wpg, {0.2, -0.4}, 1.0);
  CHECK(linf(weyl_symbol(weyl_quantize(F, g, h)).values - F.values) < 1e-6);
  // with cubic midpoints from a grid-node sampling the error stays at the interpolation level
  auto Fn = gaussian_symbol(natural_phase_grid(g, h), {0.2, -0.4}, 1.0);
  CHECK(linf(weyl_symbol(weyl_quantize(Fn, g, h)).values - F.values) < 1e-5);
}

TEST_CASE("Wick symbols") {
  auto g = default_grid();
  double h = 0.5;
  PhaseGrid pg(-2.5, 2.5, -3, 3, 40, 48);
  auto I = identity_operator(g, h);
  CHECK(linf(wick_symbol_direct(I, pg).values - CMatrix::Ones(40, 48)) < 1e-10);

  PhasePoint Y{0.5, 0.3};
  auto S = symmetry_operator(g, h, Y);
  auto ws = wick_symbol_direct(S, pg);
  auto expect = sample_symbol(pg, [&](double x, double xi) { return cplx(std::exp(-norm2(PhasePoint{x, xi} - Y) / h)); });
  CHECK(linf(ws.values - expect.values) < 1e-6);

  auto npg = natural_phase_grid(g, h);
  auto quad = weyl_quantize(sample_symbol(npg, [](double x, double xi) { return cplx(x * x + xi * xi); }), g, h);
  auto wq = wick_symbol_direct(quad, pg);
  auto eq = sample_symbol(pg, [&](double x, double xi) { return cplx(x * x + xi * xi + h); });
  CHECK(linf(wq.values - eq.values) < 1e-4);

  // pointwise evaluator agrees with the grid evaluator
  auto A = random_hermitian(g, h, 7, 3);
  auto wa = wick_symbol_direct(A, pg);
  auto pts = std::vector<PhasePoint>{{pg.x(5), pg.xi(7)}, {pg.x(30), pg.xi(41)}};
  auto vals = wick_symbol_at(A, pts);
  CHECK(std::abs(vals[0] - wa.values(5, 7)) < 1e-12);
  CHECK(std::abs(vals[1] - wa.values(30, 41)) < 1e-12);

  // two matrix-vector products per phase point
  auto psi = coherent_state(pts[1], h, g);
  CHECK(std::abs(inner(apply(A, psi), psi) - vals[1]) < 1e-12);

  PhaseGrid outside(-7.5, 7.5, -3, 3, 16, 16);
  CHECK_THROWS_AS(wick_symbol_direct(A, outside), Error);
}

TEST_CASE("heat smoothing") {
  PhaseGrid pg(-10, 10, -10, 10, 200, 200);
  double h = 0.3;
  auto c = sample_symbol(pg, [](double, double) { return cplx(2.5); });
  CHECK(linf(heat_smooth(c, h).values - c.values) < 1e-12);

  auto G = sample_symbol(pg, [](double x, double xi) { return cplx(std::exp(-(x * x + xi * xi))); });
  auto sm = heat_smooth(G, h);
  auto ex = sample_symbol(pg, [&](double x, double xi) {
    return cplx(std::exp(-(x * x + xi * xi) / (1 + h)) / (1 + h));
  });
  CHECK(linf(sm.values - ex.values) < 1e-6);
  CHECK(std::abs(sm.integral() - G.integral()) < 1e-8 * std::abs(G.integral()));

  auto ramp = sample_symbol(pg, [](double x, double) { return cplx(x); });
  CHECK_THROWS_AS(heat_smooth(ramp, h), Error);
}

TEST_CASE("Wick symbol by two routes") {
  auto g = default_grid();
  for (double h : {0.5, 0.2}) {
    auto A = random_hermitian(g, h, 11, 5);
    auto via = wick_symbol_via_weyl(A);
    PhaseGrid pg(-2.5, 2.5, -3, 3, 40, 48);
    auto direct = wick_symbol_direct(A, pg);
    // compare on the natural-grid nodes inside the window
    double worst = 0.0, scale = linf(direct.values);
    for (std::size_t i = 0; i < via.pg.nx(); ++i)
      for (std::size_t j = 0; j < via.pg.nxi(); ++j) {
        double x = via.pg.x(i), xi = via.pg.xi(j);
        if (std::abs(x) > 2.5 || std::abs(xi) > 3) continue;
        cplx d = wick_symbol_at(A, {{x, xi}})[0];
        worst = std::max(worst, std::abs(d - via.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
      }
    CHECK(worst < 1e-4 * scale);
  }
  double h = 0.5;
  auto S = symmetry_operator(g, h, {0.5, 0.3});
  auto via = wick_symbol_via_weyl(S);
  // the half-lattice image of the peak sits one band away, beyond the alias guard
  double guard = kAliasFraction * g.xi_nyquist(h);
  double worst = 0;
  for (std::size_t i = 0; i < via.pg.nx(); ++i)
    for (std::size_t j = 0; j < via.pg.nxi(); ++j) {
      double x = via.pg.x(i), xi = via.pg.xi(j);
      if (std::abs(xi) > guard) continue;
      double e = std::exp(-norm2(PhasePoint{x - 0.5, xi - 0.3}) / h);
      worst = std::max(worst, std::abs(via.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - e));
    }
  CHECK(worst < 1e-6);
  CHECK(linf(wick_symbol_via_weyl(identity_operator(g, h)).values - CMatrix::Ones(512, 256)) < 1e-10);
}

TEST_CASE("smoothing operator T_h") {
  auto g = default_grid();
  for (double h : {0.4, 0.2}) {
    auto I = identity_operator(g, h);
    CHECK(linf(smooth_Th(I).kernel - I.kernel) * g.dx() < 1e-8);
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    auto n = static_cast<Eigen::Index>(g.size());
    CMatrix k(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) k(i, j) = cplx(nd(rng), nd(rng));
    QuantumOperator R{g, h, k, false};
    CHECK(op_norm(smooth_Th(R)) <= op_norm(R) + 1e-8);

    auto A = random_hermitian(g, h, 5, 3);
    auto T = smooth_Th(A);
    PhaseGrid pg(-2.5, 2.5, -3, 3, 40, 48);
    auto lhs = wick_symbol_direct(T, pg);
    // e^{h Delta/4} sigma^wick(A) through the Weyl route on the natural grid
    auto rhs = heat_smooth(wick_symbol_via_weyl(A), h);
    auto wT = wick_symbol_via_weyl(T);
    auto wA = wick_symbol_direct(A, weyl_phase_grid(g, h), true);
    CHECK(linf(weyl_symbol(T, true).values - wA.values) < 1e-4);
    CHECK(linf(wT.values - rhs.values) < 1e-4);
    double worst = 0.0;
    for (std::size_t i = 0; i < pg.nx(); ++i)
      for (std::size_t j = 0; j < pg.nxi(); ++j) {
        auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
        worst = std::max(worst, std::abs(lhs.values(a, b) - wick_symbol_at(T, {{pg.x(i), pg.xi(j)}})[0]));
      }
    CHECK(worst < 1e-12);
    auto Ts = smooth_Th_symbolic(A);
    CHECK(op_norm(linear_combination(1.0, T, -1.0, Ts)) < 1e-3);
  }
}

TEST_CASE("Wick symbol bounds and scaling") {
  PositionGrid g(-12, 12, 512);
  for (double h : {0.5, 0.2}) {
    PhaseGrid pg(-6.5, 6.5, -6.5, 6.5, 104, 104);
    auto f = coherent_state({0.7, -0.4}, h, g);
    auto e = coherent_state({-1.1, 0.9}, h, g);
    auto n = static_cast<Eigen::Index>(g.size());
    CMatrix k(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) k(i, j) = f.values(i) * std::conj(e.values(j));
    std::vector<QuantumOperator> ops{random_hermitian(g, h, 11, 4), QuantumOperator{g, h, k, false}};
    for (const auto& A : ops) {
      auto ws = wick_symbol_direct(A, pg);
      CHECK(linf(ws.values) <= op_norm(A) + 1e-8);
      double l1 = ws.values.cwiseAbs().sum() * pg.cell_area() / (2 * kPi * h);
      CHECK(l1 <= trace_norm(A) * (1 + 1e-3));
    }
  }

  // |grad sigma| * sqrt(h) for a coherent projector does not depend on h
  std::vector<double> scaled;
  for (double h : {0.5, 0.25, 0.125}) {
    auto g = default_grid();
    PhaseGrid pg(-2, 2, -2, 2, 81, 81);
    auto ws = wick_symbol_direct(projector(coherent_state({0, 0}, h, g)), pg);
    double best = 0;
    for (Eigen::Index i = 1; i + 1 < 81; ++i)
      for (Eigen::Index j = 1; j + 1 < 81; ++j) {
        double gx = std::abs(ws.values(i + 1, j) - ws.values(i - 1, j)) / (2 * pg.dx());
        double gy = std::abs(ws.values(i, j + 1) - ws.values(i, j - 1)) / (2 * pg.dxi());
        best = std::max(best, std::hypot(gx, gy));
      }
    scaled.push_back(best * std::sqrt(h));
  }
  for (double v : scaled) CHECK(std::abs(v - scaled[0]) < 0.05 * scaled[0]);
}

TEST_CASE("trace pairing") {
  for (double h : {0.4, 0.2, 0.1}) {
    PositionGrid g(-8, 8, h < 0.15 ? 512 : 256);
    PhaseGrid p(-6, 6, -6, 6, 192, 192);
    PhasePoint a{0.3, -0.2}, b{-0.4, 0.5};
    double w = 1.0, v = 0.8;
    auto A = weyl_quantize(gaussian_symbol(p, a, w), g, h);
    auto B = weyl_quantize(gaussian_symbol(p, b, v), g, h);
    double s = w * w + v * v;
    double expected = kPi * w * w * v * v / s * std::exp(-norm2(a - b) / s) / (2 * kPi * h);
    CHECK(std::abs(trace(compose(A, B)).real() - expected) < 1e-4 * expected);
  }
}

TEST_CASE("T_h commutator constant") {
  // coherent projectors make both sides scale-free, so the fitted constant must not drift
  std::vector<double> c;
  for (double h : {0.5, 0.25, 0.125}) {
    auto g = default_grid();
    auto A = projector(coherent_state({0.3, -0.2}, h, g));
    double gap = op_norm(linear_combination(1.0, A, -1.0, smooth_Th(A)));
    c.push_back(gap / (std::sqrt(h) * regularity(A).i_inf));
  }
  double mean = (c[0] + c[1] + c[2]) / 3;
  for (double v : c) CHECK(std::abs(v - mean) <= 0.25 * mean);
}

TEST_CASE("smoothing operator T'_lambda") {
  auto g = default_grid();
  double h = 0.5;
  auto A = random_hermitian(g, h, 9, 3);
  double prev = 1e300;
  for (double lam : {0.4, 0.2, 0.1, 0.05}) {
    auto T = smooth_Tlambda(A, lam);
    double gap = trace_norm(linear_combination(1.0, T, -1.0, A));
    CHECK(gap < prev);
    prev = gap;
    CHECK(trace_norm(T) <= trace_norm(A) + 1e-6);
    auto I = identity_operator(g, h);
    CHECK(linf(smooth_Tlambda(I, lam).kernel - I.kernel) * g.dx() < 1e-8);
  }
}

TEST_CASE("counterexample pieces") {
  // Weyl kernel of the node symbol and its trace
  for (double l : {0.05, 0.5, 3.0}) {
    PositionGrid g(-12, 12, 1024);
    auto n = static_cast<Eigen::Index>(g.size());
    CMatrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        k(i, j) = counterexample_kernel(l, g.x(static_cast<std::size_t>(i)), g.x(static_cast<std::size_t>(j)));
    QuantumOperator A{g, 1.0, k, false};
    CHECK(std::abs(trace(A).real() - 0.5 / std::sqrt(1 + l * l)) < 1e-6);
    if (l >= 0.5) CHECK(std::abs(trace_norm(A) - counterexample_trace_norm(l)) < 1e-6 * counterexample_trace_norm(l));
  }
  // Wick symbol of a node against a direct blur of the node symbol
  double l = 0.7;
  PhasePoint X{0.4, -0.3};
  cplx acc = 0.0;
  double d = 0.02;
  for (int a = -500; a < 500; ++a)
    for (int b = -500; b < 500; ++b) {
      double y = (a + 0.5) * d, eta = (b + 0.5) * d;
      acc += std::polar(std::exp(-l * (y * y + eta * eta)), 2 * y * eta) *
             std::exp(-((y - X.x) * (y - X.x) + (eta - X.xi) * (eta - X.xi))) / kPi * d * d;
    }
  CHECK(std::abs(acc - counterexample_wick_node(l, X.x, X.xi)) < 1e-8);
}

TEST_CASE("counterexample construction") {
  // ||A_lambda||_tr ~ lambda^{-1/2} for small lambda
  std::vector<double> ls{0.01, 0.02, 0.05, 0.1, 0.2};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double l : ls) {
    double x = std::log(l), y = std::log(counterexample_trace_norm(l));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  double n = static_cast<double>(ls.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope >= -0.6);
  CHECK(slope <= -0.4);

  auto r = counterexample_build(CounterexampleSpec{});
  MESSAGE("trace norm " << r.trace_norm << " bound " << r.trace_norm_bound << " trace " << r.trace);
  CHECK(r.trace_norm <= r.trace_norm_bound * (1 + 1e-6));
  CHECK(std::abs(trace(r.P).real() - r.trace) < 1e-4);
  for (std::size_t k = 0; k < r.radii.size(); ++k) {
    double R = r.radii[k];
    CHECK(std::abs(r.p_ball_mass[k] - kPi * std::log1p(R * R)) < 1e-6 * r.p_ball_mass[k]);
  }
  // the |p| mass keeps growing by 2 pi ln 2 per doubling of R
  for (std::size_t k = 2; k + 1 < r.radii.size(); ++k) {
    double inc = r.p_ball_mass[k + 1] - r.p_ball_mass[k];
    CHECK(inc == doctest::Approx(2 * kPi * std::log(2.0)).epsilon(0.01));
  }
  // the Wick mass saturates
  CHECK((r.wick_ball_mass[4] - r.wick_ball_mass[3]) / r.wick_ball_mass[4] < 1e-3);
}
