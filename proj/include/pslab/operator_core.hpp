#pragma once

#include <vector>

#include "pslab/types.hpp"

namespace pslab {

struct Norms {
  double op = 0.0;
  double hs = 0.0;
  double tr = 0.0;
};

struct RegularityReport {
  double i_inf = 0.0;
  double i_tr = 0.0;
  bool compressed = false;  // evaluated on the smooth Hermite subspace
  std::size_t basis_size = 0;
};

QuantumOperator identity_operator(const PositionGrid& grid, double h);
QuantumOperator position_operator(double h, const PositionGrid& grid);
QuantumOperator momentum_operator(double h, const PositionGrid& grid);
QuantumOperator multiplication_operator(const RVector& values, const PositionGrid& grid, double h);
// |f><f|, with occupations for the sum form
QuantumOperator projector(const WaveFunction& f);
QuantumOperator mixture(const std::vector<WaveFunction>& orbitals, const std::vector<double>& weights);

QuantumOperator compose(const QuantumOperator& A, const QuantumOperator& B);
QuantumOperator adjoint(const QuantumOperator& A);
QuantumOperator linear_combination(cplx a, const QuantumOperator& A, cplx b, const QuantumOperator& B);
QuantumOperator commutator(const QuantumOperator& A, const QuantumOperator& B);

WaveFunction apply(const QuantumOperator& A, const WaveFunction& f);
cplx trace(const QuantumOperator& A);
Norms norms(const QuantumOperator& A);
// Singular values (or |eigenvalues| for hermitian input) of K*dx, descending.
RVector singular_values(const QuantumOperator& A);
double trace_norm(const QuantumOperator& A);
double op_norm(const QuantumOperator& A);
double hermiticity_defect(const QuantumOperator& A);

// Spectral -ih d/du applied to every column of a sample matrix.
void apply_momentum_columns(CMatrix& cols, const PositionGrid& grid, double h);
// Kernels of [P, A] and [Q, A].
QuantumOperator commutator_P(const QuantumOperator& A);
QuantumOperator commutator_Q(const QuantumOperator& A);

// Orthonormal Hermite functions (hbar = h) centred on the grid whose phase-space
// footprint stays inside the resolvable region.  Columns are sample vectors.
CMatrix smooth_basis(const PositionGrid& grid, double h);
// M x M matrix of A on the basis: dx^2 B^* K B.
CMatrix compress(const QuantumOperator& A, const CMatrix& basis);
// Largest relative kernel magnitude on the boundary rows/columns.
double kernel_boundary_ratio(const QuantumOperator& A);

RegularityReport regularity(const QuantumOperator& A);

struct DensityCheck {
  double trace_defect = 0.0;
  double hermitian_defect = 0.0;
  double min_eigenvalue = 0.0;
};
DensityCheck inspect_density(const QuantumOperator& rho);
// Throws invariant_violation when rho is not a density state.
void validate_density(const QuantumOperator& rho, double trace_tol = 1e-6, double eig_tol = 1e-8,
                      double herm_tol = 1e-10);

}  // namespace pslab
