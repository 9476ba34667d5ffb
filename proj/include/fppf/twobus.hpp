#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fppf/netmodel.hpp"

namespace fppf::twobus {

/// Perturbation of the nominal (lossless, transformer-free) two-bus system.
struct Perturbation {
  double g = 0.0;      // series conductance
  double b_c = 0.0;    // line charging
  double tbar = 0.0;   // tap ratio minus one
  double shift = 0.0;  // phase shift, radians

  bool is_zero() const { return g == 0.0 && b_c == 0.0 && tbar == 0.0 && shift == 0.0; }
};

/// Bus 1 is the PQ bus, bus 2 the only generator and slack. The branch runs
/// from bus 2 (transformer side) to bus 1.
struct TwoBusCase {
  double b = 1.0;  // series susceptance, y = g - j b
  Perturbation mu;
  double V2 = 1.0;
  double Pbar1 = 0.0;  // net injection at bus 1 (negative for a load)
  double Q1 = 0.0;
};

struct TwoBusParams {
  double g_t = 0.0;  // (g cos ts - b sin ts)/(tbar + 1)
  double b_t = 0.0;  // (b cos ts + g sin ts)/(tbar + 1)
  double b_h = 0.0;  // b - b_c/2
  double rho = 0.0;
  double rho_t = 0.0;
  double gammaP_t = 0.0;
  double gammaQ_t = 0.0;
  double gammaP = 0.0;  // nominal loading margins, gammaP_t / k_mu
  double gammaQ = 0.0;
  double k_mu = 1.0;
  double V1circ = 1.0;
};

/// Throws ModelError when b_t <= 0 or the inputs are out of range.
TwoBusParams derive_params(const TwoBusCase& c);

/// Smallest nominal invariant box. k1m keeps the sign of -gammaP/(1 - k2m).
struct NominalBox {
  double k1m = 0.0;
  double k2m = 0.0;
  double k2p = 0.0;
};

/// Throws DomainError naming the violated side of 0 < 4 gP^2 - 4 gQ < 1.
NominalBox nominal_box(double gammaP, double gammaQ);

/// Box half-widths k1 = |k1m|, k2 = k2m expanded by (eps1, eps2).
struct InvariantBox {
  double k1 = 0.0;
  double k2 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;

  double psi_halfwidth() const { return k1 + eps1; }
  double x_halfwidth() const { return k2 + eps2; }
  bool contains(double psi, double x, double slack = 0.0) const;
};

InvariantBox nominal_invariant_box(const TwoBusParams& p);

/// Left-hand sides minus eps of the two expansion inequalities. Both must be
/// <= 0 for the expanded box to be invariant.
struct EpsResidual {
  double e1 = 0.0;
  double e2 = 0.0;
};
EpsResidual eps_residual(const TwoBusParams& p, const InvariantBox& box);

/// Throws PreconditionError when eps2 >= 1 - k2 or k1 + eps1 > 1.
bool check_eps_invariance(const TwoBusParams& p, const InvariantBox& box);

struct EpsSolveResult {
  bool feasible = false;
  InvariantBox box;
  int iterations = 0;
  std::string diagnostic;
};

/// Newton iteration on E(eps, mu) = 0 from eps = 0 with halving when an
/// iterate leaves the domain.
EpsSolveResult solve_eps(const TwoBusParams& p, int max_iter = 50, double tol = 1e-13);

struct State {
  double psi = 0.0;
  double x = 0.0;
};

/// One application of the two-bus update: psi first, then x using the new psi.
State fmu_step(const TwoBusParams& p, const State& s);
/// Jacobian d F / d (psi, x) of fmu_step; row-major [[dpsi'/dpsi, dpsi'/dx], [dx'/dpsi, dx'/dx]].
Eigen::Matrix2d fmu_jacobian(const TwoBusParams& p, const State& s);

struct ContractionEstimate {
  double factor = 0.0;  // max infinity norm of the Jacobian over the grid
  int excluded = 0;     // grid points whose image has |psi| >= 1
};

ContractionEstimate contraction_factor(const TwoBusParams& p, const InvariantBox& box, int grid_n = 101);

struct Trajectory {
  std::vector<State> points;  // points[0] is the initial state
  bool domain_exit = false;
};

Trajectory simulate_fmu(const TwoBusParams& p, State init, int iters);
Trajectory simulate_fmu(const TwoBusCase& c, State init, int iters);

/// Equivalent general case: bus 1 (PQ) and bus 2 (slack), one branch 2 -> 1.
CaseData to_case_data(const TwoBusCase& c);

void write_trajectory_csv(std::ostream& os, const Trajectory& t);

}  // namespace fppf::twobus
