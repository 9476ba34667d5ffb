#pragma once

#include <memory>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "fppf/bigraph.hpp"
#include "fppf/netmodel.hpp"
#include "fppf/solution.hpp"
#include "fppf/types.hpp"

namespace fppf {

/// Everything the fixed-point maps need that does not change across
/// iterations. Vectors indexed by bus use the internal ordering (load buses
/// first); vectors indexed by branch follow BidirGraph::edges().
struct FppfConstants {
  BusOrdering order;
  Index n_load = 0;
  Index n_gen = 0;
  Index n_edges = 0;
  Index n_cycles = 0;

  Vec vcirc_load;  // open-circuit load voltages -B_LL^{-1} B_LG V_G
  Vec vcirc;       // (vcirc_load, V_G)

  // Branch stiffness: V°_i V°_j times B_ij, B_ji, G_ij, G_ji for forward edge (i, j).
  Vec db_plus, db_minus, dg_plus, dg_minus;

  SpMat aplus, aminus;  // incidence split, as doubles
  SpMat cycles;         // C, as doubles
  SpMat gamma_b, gamma_b_abs, gamma_g, gamma_g_abs;
  SpMat gamma_g_load, gamma_b_abs_load;  // top n_load rows
  Vec gdiag, bdiag;

  SpMat stiffness;  // S = 1/4 [V°_L] B_LL [V°_L]
  Vec alpha;
  SpMat reduction;  // R, (n+m) x (n+m-1), R^T alpha = 0
  SpMat mb;         // R^T Gamma_B
  Mat kernel;       // orthonormal basis of ker(M_B), n_edges x n_cycles

  Index reference_bus = 0;  // internal index of the angle reference
  double reference_angle = 0.0;
  std::shared_ptr<const BidirGraph> graph;

  std::shared_ptr<const Eigen::SparseLU<SpMat>> stiffness_lu;
  std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>> mb_gram;  // M_B M_B^T

  Index bus_count() const { return n_load + n_gen; }

  Vec solve_stiffness(const Vec& rhs) const;
  /// M_B^T (M_B M_B^T)^{-1} rhs, a right inverse of M_B.
  Vec apply_mb_pinv(const Vec& rhs) const;
  /// g(v) = (v, 1_m).
  Vec g_of(const Vec& v) const;
  /// Branch-wise products of normalized voltages, h(v) = [A+^T g(v)] A-^T g(v).
  Vec h_of(const Vec& v) const;
};

/// Throws ModelError when B_LL is singular or the standing assumptions on B
/// fail, and NumericalError (listing suspect branches) when M_B is rank deficient.
FppfConstants build_constants(const NetworkMatrices& nm, const BidirGraph& graph, const CaseData& c);

/// Known injections in internal ordering.
struct Injections {
  Vec pbar;    // all buses
  Vec q_load;  // load buses
};
Injections make_injections(const CaseData& c, const FppfConstants& k);

struct FppfState {
  Vec psi;  // sin of branch angle differences, one per edge
  Vec v;    // load voltages normalized by vcirc_load
  Vec xc;   // loop-flow coordinates, one per cycle
  int iter = 0;
  double mismatch = 0.0;
};

FppfState flat_start(const FppfConstants& k);
/// State from bus voltages in case order.
FppfState state_from_voltages(const FppfConstants& k, const Vec& vm, const Vec& va);

/// Vectorized active power at every bus for given (psi, v).
Vec active_power(const Vec& psi, const Vec& v, const FppfConstants& k);
/// Vectorized reactive power at every bus, written with diagonal B terms.
Vec reactive_power(const Vec& psi, const Vec& v, const FppfConstants& k);
/// Reactive power at load buses written through the nodal stiffness matrix.
Vec reactive_power_load_stiffness(const Vec& psi, const Vec& v, const FppfConstants& k);

/// Reactive-power fixed-point map; returns the next normalized load voltages.
Vec f_q(const FppfState& s, const FppfConstants& k, const Vec& q_load);
/// Active-power fixed-point map; returns the next psi. Throws DomainError
/// naming the branch when the result leaves [-1, 1].
Vec f_p(const FppfState& s, const Vec& v_next, const Vec& xc, const FppfConstants& k, const Vec& pbar);

/// Wrap to (-pi, pi].
double wrap_angle(double a);
/// C^T arcsin(psi), each entry wrapped to (-pi, pi].
Vec loop_residual(const Vec& psi, const FppfConstants& k);

/// One Newton step on the loop-flow constraint. The Jacobian uses v_next.
Vec loop_newton_step(const FppfState& s, const Vec& v_next, const FppfConstants& k);

struct MismatchParts {
  double active = 0.0;    // ||R^T (pbar - P)||_inf
  double reactive = 0.0;  // ||q_load - Q_L||_inf
  double loop = 0.0;      // ||C^T arcsin(psi) mod 2 pi||_inf
  double total() const;
};
MismatchParts mismatch_parts(const FppfState& s, const FppfConstants& k, const Injections& inj);
double mismatch(const FppfState& s, const FppfConstants& k, const Injections& inj);

enum class UpdateOrder { VXcPsi, PsiXcV };

struct FppfOptions {
  double tol = 1e-8;
  int max_iter = 100;
  UpdateOrder order = UpdateOrder::VXcPsi;
};

struct FppfResult {
  Solution solution;
  FppfState state;  // last iterate
};

FppfResult solve_fppf(const CaseData& c, const FppfConstants& k, const FppfState& init,
                      const FppfOptions& opts = {});

/// Bus angles (internal ordering) from branch variables by integrating
/// arcsin(psi) along the spanning tree from `reference`. Throws NumericalError
/// when a non-tree edge disagrees by more than `tol` radians (mod 2 pi).
Vec recover_theta(const Vec& psi, const BidirGraph& graph, Index reference, double reference_angle,
                  double tol = 1e-6);

struct FixedPointReport {
  double active_map = 0.0;    // ||psi - f_P(psi, v, xc)||_inf
  double loop = 0.0;          // ||C^T arcsin(psi) mod 2 pi||_inf
  double reactive_map = 0.0;  // ||v - f_Q(psi, v)||_inf
  double active_balance = 0.0;
  double reactive_balance = 0.0;
  Vec xc;  // least-squares loop coordinates

  double max_residual() const;
};

/// Substitute a candidate (theta, V) into the fixed-point equations and the
/// vectorized power balance.
FixedPointReport verify_fixed_point(const Solution& s, const FppfConstants& k, const Injections& inj);

/// Everything needed to run FPPF on one case.
struct PreparedCase {
  CaseData case_data;
  NetworkMatrices matrices;
  BidirGraph graph;
  AssumptionReport assumptions;
  FppfConstants constants;
  Injections injections;
};

PreparedCase prepare_case(CaseData c);

}  // namespace fppf
