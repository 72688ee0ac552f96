#pragma once

#include <string>

#include "pslab/types.hpp"

namespace pslab {

// Named smooth bounded potentials:
//   zero      0
//   harmonic  amp * x^2
//   cosine    amp * cos(scale * x)
//   gaussian  amp * exp(-x^2 / scale^2)
enum class PotentialKind { zero, harmonic, cosine, gaussian };

struct Potential {
  PotentialKind kind = PotentialKind::zero;
  double amp = 1.0;
  double scale = 1.0;
  double offset = 0.0;  // constant added to the value

  // order-th derivative, order in [0, 4]
  double derivative(double x, int order) const;
  double operator()(double x) const { return derivative(x, 0); }
  bool is_zero() const { return (kind == PotentialKind::zero || amp == 0.0) && offset == 0.0; }
};

Potential potential_from_name(const std::string& name, double amp, double scale);
std::string potential_name(PotentialKind kind);
// e^{(s/4) d^2/dx^2} V in closed form; the preset family is preserved.
Potential heat_smoothed(const Potential& V, double s);

// External field V and even pair interaction W.
struct PotentialSpec {
  Potential V;
  Potential W;
};

// Stormer-Verlet for q' = 2p, p' = -V'(q); the step is t / ceil(|t| / dt).
PhasePoint hamiltonian_flow(PhasePoint X0, double t, const Potential& V, double dt);
double hamiltonian(PhasePoint X, const Potential& V);

// V_cl(x) = V(x) + int W(x - y) m(y) dy with m the x-marginal of v.
class MeanField {
 public:
  MeanField(const PhaseDistribution& v, const PotentialSpec& pot);
  MeanField(const RVector& marginal, const PhaseGrid& pg, const PotentialSpec& pot);

  double value(double x) const { return eval(x, 0); }
  double gradient(double x) const { return eval(x, 1); }
  double derivative(double x, int order) const { return eval(x, order); }
  const RVector& marginal() const { return marginal_; }

 private:
  double eval(double x, int order) const;
  RVector marginal_;
  PhaseGrid pg_;
  PotentialSpec pot_;
};

// V_cl on the x nodes of v.pg.
RVector mean_field_Vcl(const PhaseDistribution& v, const PotentialSpec& pot);
// x-marginal sum_j v(i, j) dxi
RVector x_marginal(const PhaseDistribution& v);

// Default step min(dx / (2 max|xi|), 1e-2).
double default_vlasov_dt(const PhaseGrid& pg);

// Semi-Lagrangian step of the Vlasov equation along backward leapfrog
// characteristics of the frozen field, cubic B-spline interpolation at the feet,
// one predictor-corrector field update.
PhaseDistribution vlasov_step(const PhaseDistribution& v, double dt, const PotentialSpec& pot);
// Transport one step in a given frozen field, without the self-consistent update.
PhaseDistribution vlasov_transport(const PhaseDistribution& v, double dt, const MeanField& field);

// Foot of the characteristic through X after a backward step of length dt.
PhasePoint vlasov_foot(PhasePoint X, double dt, const MeanField& field);

double l1_distance(const Symbol& a, const Symbol& b);
double l1_distance(const PhaseDistribution& a, const PhaseDistribution& b);

}  // namespace pslab
