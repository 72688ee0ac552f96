#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pslab {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorCode : int {
  ok = 0,
  invalid_argument = 1,
  boundary_mass = 2,
  wrap_around = 3,
  out_of_domain = 4,
  coverage = 5,
  alias_violation = 6,
  boundary_leakage = 7,
  grid_mismatch = 8,
  cfl_violation = 9,
  negative_undershoot = 10,
  invariant_violation = 11,
  denominator_underflow = 12,
  quadrature_divergence = 13,
  insufficient_sampling = 14,
  step_overflow = 15,
  config_error = 16,
  io_error = 17,
  internal = 18,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode c, const std::string& msg)
      : std::runtime_error(std::string(error_name(c)) + ": " + msg), code_(c) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

struct PhasePoint {
  double x = 0.0;
  double xi = 0.0;
};

inline PhasePoint operator+(PhasePoint a, PhasePoint b) { return {a.x + b.x, a.xi + b.xi}; }
inline PhasePoint operator-(PhasePoint a, PhasePoint b) { return {a.x - b.x, a.xi - b.xi}; }
inline double norm2(PhasePoint a) { return a.x * a.x + a.xi * a.xi; }
// sigma(X, Y) = y*xi - x*eta = Im(X * conj(Y)) with X = x + i xi
inline double symplectic(PhasePoint X, PhasePoint Y) { return Y.x * X.xi - X.x * Y.xi; }

bool is_power_of_two(std::size_t n);

// Periodic grid with left-endpoint nodes x_i = x_min + i*dx, i < n.
class PositionGrid {
 public:
  PositionGrid() = default;
  PositionGrid(double x_min, double x_max, std::size_t n);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double length() const { return x_max_ - x_min_; }
  double dx() const { return (x_max_ - x_min_) / static_cast<double>(n_); }
  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx(); }
  // angular wavenumber of FFT bin j, Nyquist bin mapped to -n/2
  double wavenumber(std::size_t j) const;
  double xi_nyquist(double h) const { return kPi * h / dx(); }
  RVector nodes() const;

  bool operator==(const PositionGrid& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_ == o.n_;
  }

 private:
  double x_min_ = -8.0;
  double x_max_ = 8.0;
  std::size_t n_ = 256;
};

struct WaveFunction {
  PositionGrid grid;
  double h = 1.0;
  CVector values;

  double norm() const;
};

// dx * sum f conj(g)
cplx inner(const WaveFunction& f, const WaveFunction& g);

// Node convention matches PositionGrid: nodes at min + i*d, i < n.
class PhaseGrid {
 public:
  PhaseGrid() = default;
  PhaseGrid(double x_min, double x_max, double xi_min, double xi_max, std::size_t nx,
            std::size_t nxi);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double xi_min() const { return xi_min_; }
  double xi_max() const { return xi_max_; }
  std::size_t nx() const { return nx_; }
  std::size_t nxi() const { return nxi_; }
  double dx() const { return (x_max_ - x_min_) / static_cast<double>(nx_); }
  double dxi() const { return (xi_max_ - xi_min_) / static_cast<double>(nxi_); }
  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx(); }
  double xi(std::size_t j) const { return xi_min_ + static_cast<double>(j) * dxi(); }
  double cell_area() const { return dx() * dxi(); }
  // largest |xi| over the nodes
  double xi_extent() const;

  bool operator==(const PhaseGrid& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && xi_min_ == o.xi_min_ &&
           xi_max_ == o.xi_max_ && nx_ == o.nx_ && nxi_ == o.nxi_;
  }

 private:
  double x_min_ = -4.0, x_max_ = 4.0, xi_min_ = -4.0, xi_max_ = 4.0;
  std::size_t nx_ = 64, nxi_ = 64;
};

inline constexpr double kAliasFraction = 0.7;

// Throws alias_violation when pg reaches beyond 0.7 of the momentum Nyquist bound.
void check_alias_guard(const PhaseGrid& pg, const PositionGrid& grid, double h);

// values(i, j) samples F(pg.x(i), pg.xi(j)).
struct Symbol {
  PhaseGrid pg;
  CMatrix values;
  std::optional<double> h_tag;

  Symbol() = default;
  Symbol(const PhaseGrid& g, std::optional<double> h = std::nullopt)
      : pg(g), values(CMatrix::Zero(static_cast<Eigen::Index>(g.nx()),
                                    static_cast<Eigen::Index>(g.nxi()))),
        h_tag(h) {}

  double l1() const { return values.cwiseAbs().sum() * pg.cell_area(); }
  double linf() const { return values.cwiseAbs().maxCoeff(); }
  cplx integral() const { return values.sum() * pg.cell_area(); }
};

template <class F>
Symbol sample_symbol(const PhaseGrid& pg, F&& f) {
  Symbol s(pg);
  for (std::size_t i = 0; i < pg.nx(); ++i)
    for (std::size_t j = 0; j < pg.nxi(); ++j)
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(pg.x(i), pg.xi(j));
  return s;
}

struct PhaseDistribution {
  PhaseGrid pg;
  RMatrix values;

  PhaseDistribution() = default;
  explicit PhaseDistribution(const PhaseGrid& g)
      : pg(g), values(RMatrix::Zero(static_cast<Eigen::Index>(g.nx()),
                                    static_cast<Eigen::Index>(g.nxi()))) {}
  double mass() const { return values.sum() * pg.cell_area(); }
};

// Real part of a symbol as a distribution; negative values are kept.
PhaseDistribution to_distribution(const Symbol& s);
Symbol to_symbol(const PhaseDistribution& d);

// Kernel K(i, j) samples K(x_i, x_j); (Af)_i = sum_j K_ij f_j dx.
struct QuantumOperator {
  PositionGrid grid;
  double h = 1.0;
  CMatrix kernel;
  bool hermitian_hint = false;

  std::size_t size() const { return grid.size(); }
};

// Function of x only, sampled on a PositionGrid.
struct PotentialField {
  PositionGrid grid;
  RVector values;
};

}  // namespace pslab
