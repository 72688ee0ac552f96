#pragma once

#include <vector>

#include "pslab/classical_dynamics.hpp"
#include "pslab/quantum_dynamics.hpp"
#include "pslab/types.hpp"

namespace pslab {

// S_h(A)(X, Y) = <A Psi_X, Psi_Y> / <Psi_X, Psi_Y>.  denominator_underflow once
// |X - Y|^2 / 4h passes ln(1e300).
cplx bi_wick_eval(const QuantumOperator& A, PhasePoint X, PhasePoint Y);

// Largest separation |X - Y|^2 / h at which bound checks sample S_h.
inline constexpr double kBiWickClamp = 40.0;

enum class DerivativeMethod {
  automatic,  // spectral when F decays at the frame of its grid, stencils otherwise
  spectral,
  stencil,  // fourth-order finite differences, exact on quartic polynomials
};

// d = (d_x - i d_xi) / 2 and dbar = (d_x + i d_xi) / 2 applied alpha times.
Symbol wirtinger(const Symbol& F, int alpha, bool conjugate,
                 DerivativeMethod method = DerivativeMethod::automatic);
// d_x^ox d_xi^oxi F
Symbol partial_derivative(const Symbol& F, int ox, int oxi,
                          DerivativeMethod method = DerivativeMethod::automatic);

// sum_{k < m} (2h)^k / k! d^k sigma(A) dbar^k sigma(B), from given symbols.
Symbol wick_expand(const Symbol& sa, const Symbol& sb, int m, double h);
Symbol wick_compose_expand(const QuantumOperator& A, const QuantumOperator& B, int m, const PhaseGrid& pg);

struct CompositionRemainder {
  Symbol R;               // sigma(A B) minus the partial sum
  double l1 = 0.0;        // (2 pi h)^{-1} int |R|
  double bound_rhs = 0.0;  // ||B||_tr sum_{k in E_m} h^{k/2} ||d^k F||_inf
};

// A = Op^weyl(F) on B's grid; F is also differentiated for the bound.
CompositionRemainder composition_remainder(const Symbol& F, const QuantumOperator& B, int m,
                                           const PhaseGrid& pg);
// Orders k with m <= k <= max(m, 2).
std::vector<int> remainder_orders(int m);

struct PdeResidual {
  std::vector<double> times;
  std::vector<Symbol> lhs;       // du/dt + 2 xi du/dx + h d2u/dxdxi
  std::vector<Symbol> rhs;       // (1/ih)(2 pi h)^{-1} sigma^wick([V_q, rho])
  std::vector<Symbol> residual;  // lhs - rhs
};

// Uniformly spaced states; centred differences at interior times.
PdeResidual pde_residual(const std::vector<MeanFieldState>& traj, const PhaseGrid& pg);

// lhs minus (1/ih) sum_{1<=k<m} (2h)^k/k! [d^k Phi dbar^k u - d^k u dbar^k Phi],
// Phi = e^{(h/4)Delta} V + W * (x-marginal of u), at the interior times.
std::vector<Symbol> wick_truncation_residual(const std::vector<MeanFieldState>& traj, const PhaseGrid& pg,
                                             int m);

}  // namespace pslab
