#pragma once

#include "pslab/types.hpp"

namespace pslab {

// Distance beyond which e^{-(u-x)^2/2h} < 1e-12.
double coherent_decay_radius(double h);

WaveFunction coherent_state(PhasePoint X, double h, const PositionGrid& grid);

// <Psi_X, Psi_Y> in closed form.
cplx coherent_overlap(PhasePoint X, PhasePoint Y, double h);

// W_{X,h} f (u) = e^{i u xi/h - i x xi/2h} f(u - x)
WaveFunction heisenberg_translate(PhasePoint X, double h, const WaveFunction& f);

// Sigma_{Y,h} f (u) = e^{2i(u-y)eta/h} f(2y - u)
WaveFunction symmetry_apply(PhasePoint Y, double h, const WaveFunction& f);

// T(i, j) = <f, Psi_{X_ij,h}> for X_ij = (pg.x(i), pg.xi(j)).
CMatrix coherent_transform(const WaveFunction& f, double h, const PhaseGrid& pg);

// (2 pi h)^{-1} sum_X |<f, Psi_X>|^2 * cell_area
double resolution_of_identity(const WaveFunction& f, double h, const PhaseGrid& pg);

// Index range [lo, hi] of nodes where |f| exceeds tol * max|f|; empty when lo > hi.
std::pair<long, long> essential_support(const CVector& v, double tol);

}  // namespace pslab
