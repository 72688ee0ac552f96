#pragma once

#include <vector>

#include "pslab/types.hpp"

namespace pslab {

// Grid nodes in x, the full dual momentum band xi_k = h k (k = -N/2 .. N/2-1) in xi.
PhaseGrid natural_phase_grid(const PositionGrid& grid, double h);
// Same momenta, x nodes on every midpoint x_min + k dx/2.
PhaseGrid weyl_phase_grid(const PositionGrid& grid, double h);

// K(x,y) = (2 pi h)^{-1} int F((x+y)/2, xi) e^{i(x-y)xi/h} dxi
QuantumOperator weyl_quantize(const Symbol& F, const PositionGrid& grid, double h);

// Weyl symbol on weyl_phase_grid(A.grid, A.h). With periodic set, kernel pairs
// more than half a box apart are read across the seam; otherwise they are taken
// at face value.
Symbol weyl_symbol(const QuantumOperator& A, bool periodic = false);
// 2 Tr(A Sigma_{X,h}) evaluated with the symmetry operator.
cplx weyl_symbol_by_reflection(const QuantumOperator& A, PhasePoint X);

// <A Psi_X, Psi_X>.  With periodic = true the coherent states are wrapped on the
// periodic grid and no coverage check is made.
// Throws coverage / alias_violation when coherent states centred on pg do not
// fit the position grid at this h.
void check_wick_coverage(const PositionGrid& grid, double h, const PhaseGrid& pg);
Symbol wick_symbol_direct(const QuantumOperator& A, const PhaseGrid& pg, bool periodic = false);
std::vector<cplx> wick_symbol_at(const QuantumOperator& A, const std::vector<PhasePoint>& pts);

// Convolution with (pi h)^{-1} e^{-|X|^2/h}.
Symbol heat_smooth(const Symbol& F, double h);
Symbol wick_symbol_via_weyl(const QuantumOperator& A);

// Gaussian average of Heisenberg conjugations with weight (pi s)^{-1} e^{-|X|^2/s}
// and translations W_{X,ht}.
QuantumOperator gaussian_conjugation_average(const QuantumOperator& A, double s, double ht);
QuantumOperator smooth_Th(const QuantumOperator& A);
// Op^weyl(sigma^wick(A)) on the natural phase grid.
QuantumOperator smooth_Th_symbolic(const QuantumOperator& A);
QuantumOperator smooth_Tlambda(const QuantumOperator& A, double lambda);

// Trace-class operator with a non-integrable Weyl symbol, h = 1.
struct CounterexampleQuadrature {
  double lambda_min = 1e-3;
  double lambda_max = 30.0;
  int nodes = 200;
};

struct CounterexampleSpec {
  double alpha = 1.0;
  CounterexampleQuadrature quad;
  PositionGrid grid{-16.0, 16.0, 512};
  std::vector<double> radii{2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
};

struct CounterexampleNode {
  double lambda;
  double weight;        // includes e^{-lambda} lambda^{alpha-1} / Gamma(alpha) d lambda
  double trace_norm;    // closed form of ||A_lambda||_tr
  double trace;         // closed form of Tr A_lambda
};

struct CounterexampleResult {
  QuantumOperator P;
  std::vector<CounterexampleNode> nodes;
  double trace_norm = 0.0;          // ||P||_tr on the grid
  double trace_norm_doubled = 0.0;  // same with twice the nodes
  double trace_norm_bound = 0.0;    // sum_n w_n ||A_n||_tr
  double trace = 0.0;               // sum_n w_n Tr A_n
  std::vector<double> radii;
  std::vector<double> p_ball_mass;     // int_{|X|<R} |p|
  std::vector<double> wick_ball_mass;  // int_{|X|<R} |sigma^wick(P)|
};

double counterexample_a(double lambda);
double counterexample_b(double lambda);
double counterexample_c(double lambda);
double counterexample_prefactor(double lambda);
double counterexample_kernel(double lambda, double x, double y);
double counterexample_trace_norm(double lambda);
cplx counterexample_symbol(double alpha, double x, double xi);
// sigma^wick(A_lambda)(X) at h = 1
cplx counterexample_wick_node(double lambda, double x, double xi);
std::vector<CounterexampleNode> counterexample_nodes(double alpha, const CounterexampleQuadrature& q);
QuantumOperator counterexample_operator(const std::vector<CounterexampleNode>& nodes,
                                        const PositionGrid& grid);
// Radial integral of |f| over |X| < R.
template <class F>
double ball_mass(F&& f, double R, int nr = 400, int ntheta = 64);

CounterexampleResult counterexample_build(const CounterexampleSpec& spec);

}  // namespace pslab

#include "pslab/quantization_impl.hpp"
