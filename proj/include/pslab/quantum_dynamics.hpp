#pragma once

#include <vector>

#include "pslab/classical_dynamics.hpp"
#include "pslab/types.hpp"

namespace pslab {

// V_q(x_i) = V(x_i) + dx sum_j W(x_i - x_j) n(x_j) for the diagonal density n.
PotentialField mean_field_Vq(const QuantumOperator& rho, const PotentialSpec& pot);
PotentialField mean_field_Vq_from_density(const RVector& density, const PositionGrid& grid,
                                          const PotentialSpec& pot);

// Strang splitting for H = -h^2 d^2/dx^2 + V: half potential kick, exact kinetic
// phase e^{-i dt h k^2}, half potential kick.
WaveFunction schrodinger_step(const WaveFunction& f, double dt, const PotentialField& V);
// Same map on every column of a sample matrix.
void schrodinger_step_columns(CMatrix& cols, const PositionGrid& grid, double h, double dt,
                              const PotentialField& V);
// U K U^* for the same one-step propagator U.
QuantumOperator conjugate_step(const QuantumOperator& rho, double dt, const PotentialField& V);

// Fraction of spectral power beyond 0.7 of the Nyquist wavenumber.
double spectral_tail(const CVector& f);

// Density state under the Hartree mean-field flow.  Low-rank states keep
// orthonormal orbitals and occupations; otherwise the kernel is dense.
struct MeanFieldState {
  PositionGrid grid;
  double h = 1.0;
  double t = 0.0;
  PotentialSpec pot;
  std::vector<WaveFunction> orbitals;
  std::vector<double> occupations;
  CMatrix kernel;  // used when orbitals is empty

  bool factorized() const { return !orbitals.empty(); }
  QuantumOperator density() const;
  RVector diagonal_density() const;
};

inline constexpr std::size_t kMaxOrbitalRank = 16;

// Factorizes rho when its numerical rank is at most max_rank.
MeanFieldState make_state(const QuantumOperator& rho, const PotentialSpec& pot,
                          std::size_t max_rank = kMaxOrbitalRank);
MeanFieldState make_state(std::vector<WaveFunction> orbitals, std::vector<double> occupations,
                          const PotentialSpec& pot);
// Dense copy of a state (for cross-checks of the orbital path).
MeanFieldState to_dense(const MeanFieldState& s);

struct StepDiagnostics {
  double trace_defect = 0.0;
  double hermitian_defect = 0.0;
  double min_eigenvalue = 0.0;
  double orthonormality_defect = 0.0;
};

// One predictor-corrector step; invariant_violation when the result leaves the
// density-state tolerances.  Dense states check trace and hermiticity every
// step and the spectrum when spectrum_check is set (an O(N^3) solve).
MeanFieldState tdhf_step(const MeanFieldState& s, double dt, StepDiagnostics* diag = nullptr,
                         bool spectrum_check = true);
// Steps of size t_end / ceil(t_end / dt); dense spectra are checked every
// spectrum_every steps and at the end.
MeanFieldState tdhf_evolve(MeanFieldState s, double t_end, double dt, int spectrum_every = 1);

// Tr(-h^2 rho'') + Tr(V rho) + (1/2) int int W(x - y) n(x) n(y)
double tdhf_energy(const MeanFieldState& s);

// u_h = (2 pi h)^{-1} sigma^wick(rho), real part.
PhaseDistribution husimi_density(const QuantumOperator& rho, const PhaseGrid& pg);
PhaseDistribution husimi_density(const MeanFieldState& s, const PhaseGrid& pg);

// Position mean and variance of a normalized wave function.
double position_mean(const WaveFunction& f);
double position_variance(const WaveFunction& f);

}  // namespace pslab
