#include "fppf/fppf_core.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/QR>

#include "fppf/errors.hpp"

namespace fppf {

namespace {

double inf_norm(const Vec& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

void require_psi_in_range(const Vec& psi, const char* where) {
  for (Index k = 0; k < psi.size(); ++k) {
    if (!(std::abs(psi[k]) <= 1.0)) {
      std::ostringstream msg;
      msg << "psi out of range in " << where << ": |psi[" << k << "]| = " << std::abs(psi[k]) << " > 1";
      throw DomainError(msg.str(), static_cast<std::size_t>(k), psi[k]);
    }
  }
}

void require_positive_v(const Vec& v, const char* where) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) {
      std::ostringstream msg;
      msg << "nonpositive normalized voltage in " << where << ": v[" << i << "] = " << v[i];
      throw DomainError(msg.str(), std::nullopt, v[i]);
    }
  }
}

Vec cos_of(const Vec& psi) { return (1.0 - psi.array().square()).sqrt().matrix(); }

// f_P without the range check on its result.
Vec active_map(const Vec& psi, const Vec& v, const Vec& xc, const FppfConstants& k, const Vec& pbar) {
  const Vec g = k.g_of(v);
  const Vec h = k.h_of(v);
  const Vec vg = k.vcirc.cwiseProduct(g);
  const Vec rhs = pbar - vg.cwiseProduct(k.gdiag).cwiseProduct(vg) - k.gamma_g_abs * h.cwiseProduct(cos_of(psi));
  Vec y = k.apply_mb_pinv(k.reduction.transpose() * rhs);
  if (k.n_cycles > 0) y += k.kernel * xc;
  return y.cwiseQuotient(h);
}

// Orthonormal R with R^T alpha = 0: the Householder reflection taking
// alpha/|alpha| to e_r, with column r dropped. Reduces to the identity minus
// column r when alpha = e_r.
SpMat reduction_matrix(const Vec& alpha) {
  const Index N = alpha.size();
  Index r = 0;
  alpha.maxCoeff(&r);
  Vec w = alpha / alpha.norm();
  w[r] -= 1.0;
  const double ww = w.squaredNorm();
  std::vector<Eigen::Triplet<double>> t;
  for (Index col = 0, out = 0; col < N; ++col) {
    if (col == r) continue;
    for (Index row = 0; row < N; ++row) {
      double h = row == col ? 1.0 : 0.0;
      if (ww > 0.0) h -= 2.0 * w[row] * w[col] / ww;
      if (h != 0.0) t.emplace_back(row, out, h);
    }
    ++out;
  }
  SpMat R(N, N - 1);
  R.setFromTriplets(t.begin(), t.end());
  return R;
}

}  // namespace

Vec FppfConstants::solve_stiffness(const Vec& rhs) const {
  if (n_load == 0) return Vec(0);
  return stiffness_lu->solve(rhs);
}

Vec FppfConstants::apply_mb_pinv(const Vec& rhs) const { return mb.transpose() * mb_gram->solve(rhs); }

Vec FppfConstants::g_of(const Vec& v) const {
  Vec g(bus_count());
  g.head(n_load) = v;
  g.tail(n_gen).setOnes();
  return g;
}

Vec FppfConstants::h_of(const Vec& v) const {
  const Vec g = g_of(v);
  return (aplus.transpose() * g).cwiseProduct(aminus.transpose() * g);
}

FppfConstants build_constants(const NetworkMatrices& nm, const BidirGraph& graph, const CaseData& c) {
  const AssumptionReport rep = check_assumptions(nm, graph);
  if (!rep.diag_dominant) {
    std::ostringstream msg;
    msg << "-B_LL is not a nonsingular M-matrix (no positive scaling makes B_LL strictly diagonally dominant)";
    throw ModelError(msg.str());
  }
  if (!rep.offdiag_positive) {
    std::ostringstream msg;
    msg << "nonpositive off-diagonal susceptance on " << rep.nonpositive_edges.size() << " branch(es), first between buses "
        << nm.bus_ids[static_cast<std::size_t>(graph.edges()[rep.nonpositive_edges.front()].first)] << " and "
        << nm.bus_ids[static_cast<std::size_t>(graph.edges()[rep.nonpositive_edges.front()].second)];
    throw ModelError(msg.str());
  }

  FppfConstants k;
  k.order = nm.order;
  k.n_load = nm.order.n_load;
  k.n_gen = nm.order.n_gen;
  k.n_edges = graph.edge_count();
  const Index n = k.n_load;
  const Index N = k.bus_count();

  Vec vg(k.n_gen);
  for (Index i = 0; i < k.n_gen; ++i)
    vg[i] = c.buses[static_cast<std::size_t>(nm.order.internal_to_case[static_cast<std::size_t>(n + i)])].Vm;

  k.vcirc_load = Vec::Zero(n);
  if (n > 0) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(nm.B_LL);
    if (lu.info() != Eigen::Success) throw ModelError("B_LL is singular");
    k.vcirc_load = -lu.solve(nm.B_LG * vg);
    for (Index i = 0; i < n; ++i)
      if (!(k.vcirc_load[i] > 0.0))
        throw ModelError("open-circuit voltage is not positive at bus " + std::to_string(nm.bus_ids[static_cast<std::size_t>(i)]));
  }
  k.vcirc.resize(N);
  k.vcirc << k.vcirc_load, vg;

  const Index E = k.n_edges;
  k.db_plus.resize(E);
  k.db_minus.resize(E);
  k.dg_plus.resize(E);
  k.dg_minus.resize(E);
  for (Index e = 0; e < E; ++e) {
    const auto [i, j] = graph.edges()[static_cast<std::size_t>(e)];
    const double vv = k.vcirc[i] * k.vcirc[j];
    k.db_plus[e] = vv * nm.B.coeff(i, j);
    k.db_minus[e] = vv * nm.B.coeff(j, i);
    k.dg_plus[e] = vv * nm.G.coeff(i, j);
    k.dg_minus[e] = vv * nm.G.coeff(j, i);
  }

  k.aplus = graph.Aplus().cast<double>();
  k.aminus = graph.Aminus().cast<double>();
  k.cycles = graph.C().cast<double>();
  k.n_cycles = graph.cycle_count();

  const AWIncidence awb = aw_incidence(graph, k.db_plus, k.db_minus);
  const AWIncidence awg = aw_incidence(graph, k.dg_plus, k.dg_minus);
  k.gamma_b = awb.gamma;
  k.gamma_b_abs = awb.gamma_abs;
  k.gamma_g = awg.gamma;
  k.gamma_g_abs = awg.gamma_abs;
  k.gamma_g_load = k.gamma_g.topRows(n);
  k.gamma_b_abs_load = k.gamma_b_abs.topRows(n);
  k.gdiag = nm.Gdiag;
  k.bdiag = nm.Bdiag;

  const Vec half_vc = 0.5 * k.vcirc_load;
  k.stiffness = half_vc.asDiagonal() * nm.B_LL * half_vc.asDiagonal();
  if (n > 0) {
    auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
    lu->compute(k.stiffness);
    if (lu->info() != Eigen::Success) throw ModelError("nodal stiffness matrix is singular");
    k.stiffness_lu = std::move(lu);
  }

  k.alpha.resize(N);
  for (Index i = 0; i < N; ++i) k.alpha[i] = c.alpha[static_cast<std::size_t>(nm.order.internal_to_case[static_cast<std::size_t>(i)])];
  k.reduction = reduction_matrix(k.alpha);
  k.mb = k.reduction.transpose() * k.gamma_b;
  k.mb.prune(0.0);

  // Rank of M_B and an orthonormal basis of its kernel from a QR of M_B^T.
  const Mat mbt = Mat(k.mb.transpose());
  Eigen::ColPivHouseholderQR<Mat> qr(mbt);
  qr.setThreshold(1e-8);
  if (qr.rank() < N - 1) {
    std::ostringstream msg;
    msg << "M_B has numerical rank " << qr.rank() << " < " << N - 1 << "; suspect branches:";
    int listed = 0;
    for (Index e = 0; e < E && listed < 10; ++e) {
      if (k.db_plus[e] <= 1e-8 * k.db_plus.cwiseAbs().maxCoeff() || k.db_minus[e] <= 1e-8 * k.db_minus.cwiseAbs().maxCoeff()) {
        const auto [i, j] = graph.edges()[static_cast<std::size_t>(e)];
        msg << ' ' << nm.bus_ids[static_cast<std::size_t>(i)] << '-' << nm.bus_ids[static_cast<std::size_t>(j)];
        ++listed;
      }
    }
    if (listed == 0) msg << " (none with weak stiffness)";
    throw NumericalError(msg.str());
  }
  if (E - (N - 1) != k.n_cycles) throw NumericalError("kernel dimension does not match the cycle count");
  Mat basis = Mat::Zero(E, k.n_cycles);
  if (k.n_cycles > 0) {
    basis.bottomRows(k.n_cycles).setIdentity();
    basis.applyOnTheLeft(qr.householderQ());
  }
  k.kernel = std::move(basis);

  auto gram = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  gram->compute(SpMat(k.mb * k.mb.transpose()));
  if (gram->info() != Eigen::Success) throw NumericalError("M_B M_B^T factorization failed");
  k.mb_gram = std::move(gram);

  const Index ref_case = c.reference_bus_index();
  k.reference_bus = nm.order.case_to_internal[static_cast<std::size_t>(ref_case)];
  k.reference_angle = c.buses[static_cast<std::size_t>(ref_case)].Va;
  k.graph = std::make_shared<const BidirGraph>(graph);
  return k;
}

Injections make_injections(const CaseData& c, const FppfConstants& k) {
  const Vec p = c.scheduled_p();
  const Vec q = c.scheduled_q();
  Injections inj;
  inj.pbar.resize(k.bus_count());
  for (Index i = 0; i < k.bus_count(); ++i) inj.pbar[i] = p[k.order.internal_to_case[static_cast<std::size_t>(i)]];
  inj.q_load.resize(k.n_load);
  for (Index i = 0; i < k.n_load; ++i) inj.q_load[i] = q[k.order.internal_to_case[static_cast<std::size_t>(i)]];
  return inj;
}

FppfState flat_start(const FppfConstants& k) {
  FppfState s;
  s.v = k.vcirc_load.cwiseInverse();
  s.psi = Vec::Zero(k.n_edges);
  s.xc = Vec::Zero(k.n_cycles);
  return s;
}

FppfState state_from_voltages(const FppfConstants& k, const Vec& vm, const Vec& va) {
  if (vm.size() != k.bus_count() || va.size() != k.bus_count()) throw DimensionError("voltage vectors must cover every bus");
  Vec theta(k.bus_count());
  FppfState s;
  s.v.resize(k.n_load);
  for (Index i = 0; i < k.bus_count(); ++i) {
    const Index ci = k.order.internal_to_case[static_cast<std::size_t>(i)];
    theta[i] = va[ci];
    if (i < k.n_load) s.v[i] = vm[ci] / k.vcirc_load[i];
  }
  s.psi = ((k.aplus - k.aminus).transpose() * theta).array().sin().matrix();
  s.xc = Vec::Zero(k.n_cycles);
  return s;
}

Vec active_power(const Vec& psi, const Vec& v, const FppfConstants& k) {
  const Vec g = k.g_of(v);
  const Vec h = k.h_of(v);
  const Vec vg = k.vcirc.cwiseProduct(g);
  return vg.cwiseProduct(k.gdiag).cwiseProduct(vg) + k.gamma_g_abs * h.cwiseProduct(cos_of(psi)) +
         k.gamma_b * h.cwiseProduct(psi);
}

Vec reactive_power(const Vec& psi, const Vec& v, const FppfConstants& k) {
  const Vec g = k.g_of(v);
  const Vec h = k.h_of(v);
  const Vec vg = k.vcirc.cwiseProduct(g);
  return -vg.cwiseProduct(k.bdiag).cwiseProduct(vg) + k.gamma_g * h.cwiseProduct(psi) -
         k.gamma_b_abs * h.cwiseProduct(cos_of(psi));
}

Vec reactive_power_load_stiffness(const Vec& psi, const Vec& v, const FppfConstants& k) {
  const Vec h = k.h_of(v);
  const Vec one_minus_cos = (1.0 - cos_of(psi).array()).matrix();
  return 4.0 * v.cwiseProduct(k.stiffness * (Vec::Ones(k.n_load) - v)) + k.gamma_g_load * h.cwiseProduct(psi) +
         k.gamma_b_abs_load * h.cwiseProduct(one_minus_cos);
}

Vec f_q(const FppfState& s, const FppfConstants& k, const Vec& q_load) {
  require_positive_v(s.v, "f_Q");
  require_psi_in_range(s.psi, "f_Q");
  const Vec h = k.h_of(s.v);
  const Vec one_minus_cos = (1.0 - cos_of(s.psi).array()).matrix();
  const Vec r = q_load - k.gamma_g_load * h.cwiseProduct(s.psi) - k.gamma_b_abs_load * h.cwiseProduct(one_minus_cos);
  return Vec::Ones(k.n_load) - 0.25 * k.solve_stiffness(r.cwiseQuotient(s.v));
}

Vec f_p(const FppfState& s, const Vec& v_next, const Vec& xc, const FppfConstants& k, const Vec& pbar) {
  require_positive_v(v_next, "f_P");
  require_psi_in_range(s.psi, "f_P");
  Vec next = active_map(s.psi, v_next, xc, k, pbar);
  require_psi_in_range(next, "f_P");
  return next;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r > std::numbers::pi) r -= two_pi;
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

Vec loop_residual(const Vec& psi, const FppfConstants& k) {
  Vec r = k.cycles.transpose() * psi.array().asin().matrix();
  for (Index i = 0; i < r.size(); ++i) r[i] = wrap_angle(r[i]);
  return r;
}

Vec loop_newton_step(const FppfState& s, const Vec& v_next, const FppfConstants& k) {
  if (k.n_cycles == 0) return s.xc;
  for (Index e = 0; e < s.psi.size(); ++e) {
    if (!(std::abs(s.psi[e]) < 1.0)) {
      std::ostringstream msg;
      msg << "loop-flow Newton step needs |psi| < 1, branch " << e << " has " << s.psi[e];
      throw DomainError(msg.str(), static_cast<std::size_t>(e), s.psi[e]);
    }
  }
  require_positive_v(v_next, "loop Newton step");
  const Vec scale = (1.0 - s.psi.array().square()).rsqrt().matrix().cwiseQuotient(k.h_of(v_next));
  const Mat jac = k.cycles.transpose() * (scale.asDiagonal() * k.kernel);
  Eigen::FullPivLU<Mat> lu(jac);
  if (!lu.isInvertible()) throw NumericalError("singular loop-flow Jacobian");
  return s.xc - lu.solve(loop_residual(s.psi, k));
}

double MismatchParts::total() const { return std::max({active, reactive, loop}); }

MismatchParts mismatch_parts(const FppfState& s, const FppfConstants& k, const Injections& inj) {
  MismatchParts m;
  if (s.psi.size() > 0 && !(s.psi.cwiseAbs().maxCoeff() <= 1.0)) {
    m.active = m.reactive = m.loop = std::numeric_limits<double>::infinity();
    return m;
  }
  m.active = inf_norm(k.reduction.transpose() * (inj.pbar - active_power(s.psi, s.v, k)));
  m.reactive = inf_norm(inj.q_load - reactive_power_load_stiffness(s.psi, s.v, k));
  m.loop = inf_norm(loop_residual(s.psi, k));
  return m;
}

double mismatch(const FppfState& s, const FppfConstants& k, const Injections& inj) {
  const double m = mismatch_parts(s, k, inj).total();
  return std::isnan(m) ? std::numeric_limits<double>::infinity() : m;
}

Vec recover_theta(const Vec& psi, const BidirGraph& graph, Index reference, double reference_angle, double tol) {
  if (psi.size() != graph.edge_count()) throw DimensionError("psi must have one entry per edge");
  for (Index e = 0; e < psi.size(); ++e)
    if (!(std::abs(psi[e]) <= 1.0))
      throw DomainError("psi out of range in recover_theta", static_cast<std::size_t>(e), psi[e]);
  const Vec phi = psi.array().asin().matrix();
  Vec theta = Vec::Constant(graph.node_count(), std::numeric_limits<double>::quiet_NaN());
  theta[reference] = reference_angle;
  std::deque<Index> queue{reference};
  while (!queue.empty()) {
    const Index u = queue.front();
    queue.pop_front();
    for (const auto& [w, e] : graph.tree_adjacency()[static_cast<std::size_t>(u)]) {
      if (!std::isnan(theta[w])) continue;
      const bool forward = graph.edges()[static_cast<std::size_t>(e)].first == u;
      theta[w] = forward ? theta[u] - phi[e] : theta[u] + phi[e];
      queue.push_back(w);
    }
  }
  for (Index e = 0; e < graph.edge_count(); ++e) {
    if (graph.is_tree_edge(e)) continue;
    const auto [i, j] = graph.edges()[static_cast<std::size_t>(e)];
    const double gap = std::abs(wrap_angle(theta[i] - theta[j] - phi[e]));
    if (gap > tol) {
      std::ostringstream msg;
      msg << "loop-flow inconsistency of " << gap << " rad on non-tree branch " << e;
      throw NumericalError(msg.str());
    }
  }
  return theta;
}

namespace {

Solution make_solution(const CaseData& c, const FppfConstants& k, const Injections& inj, const FppfState& s,
                       SolveReport report, bool check_loops) {
  Solution sol;
  sol.base_mva = c.base_mva;
  const Index N = k.bus_count();
  for (const auto& b : c.buses) sol.bus_ids.push_back(b.id);
  sol.vm = Vec::Zero(N);
  sol.theta = Vec::Constant(N, std::numeric_limits<double>::quiet_NaN());

  const bool psi_ok = s.psi.size() == 0 || s.psi.cwiseAbs().maxCoeff() <= 1.0;
  const Vec vm_int = k.vcirc.cwiseProduct(k.g_of(s.v));
  Vec th_int = Vec::Constant(N, std::numeric_limits<double>::quiet_NaN());
  if (psi_ok) {
    try {
      th_int = recover_theta(s.psi, *k.graph, k.reference_bus, k.reference_angle,
                             check_loops ? 1e-6 : std::numeric_limits<double>::infinity());
    } catch (const NumericalError& e) {
      report.status = SolveStatus::Diverged;
      report.message = e.what();
      th_int = recover_theta(s.psi, *k.graph, k.reference_bus, k.reference_angle, std::numeric_limits<double>::infinity());
    }
  }
  for (Index i = 0; i < N; ++i) {
    const Index ci = k.order.internal_to_case[static_cast<std::size_t>(i)];
    sol.vm[ci] = vm_int[i];
    sol.theta[ci] = th_int[i];
  }

  if (psi_ok) {
    const Vec q = reactive_power(s.psi, s.v, k);
    const Vec p = active_power(s.psi, s.v, k);
    sol.qg.resize(k.n_gen);
    for (Index i = 0; i < k.n_gen; ++i) {
      const Index ci = k.order.internal_to_case[static_cast<std::size_t>(k.n_load + i)];
      const auto& bus = c.buses[static_cast<std::size_t>(ci)];
      sol.gen_bus_ids.push_back(bus.id);
      sol.qg[i] = q[k.n_load + i] + bus.Qd;
    }
    sol.ps = (p - inj.pbar).sum();
  }
  sol.report = std::move(report);
  return sol;
}

}  // namespace

FppfResult solve_fppf(const CaseData& c, const FppfConstants& k, const FppfState& init, const FppfOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (init.psi.size() != k.n_edges || init.v.size() != k.n_load || init.xc.size() != k.n_cycles)
    throw DimensionError("initial state does not match the case dimensions");
  if (opts.max_iter < 0 || !(opts.tol > 0.0)) throw PreconditionError("tolerance must be positive and max_iter >= 0");

  const Injections inj = make_injections(c, k);
  SolveReport rep;
  rep.algorithm = Algorithm::Fppf;

  FppfState s = init;
  s.iter = 0;
  s.mismatch = mismatch(s, k, inj);
  rep.mismatch_history.push_back(s.mismatch);
  bool failed = false;

  while (s.mismatch > opts.tol && s.iter < opts.max_iter) {
    try {
      FppfState next;
      if (opts.order == UpdateOrder::VXcPsi) {
        next.v = f_q(s, k, inj.q_load);
        next.xc = loop_newton_step(s, next.v, k);
        next.psi = f_p(s, next.v, next.xc, k, inj.pbar);
      } else {
        next.psi = f_p(s, s.v, s.xc, k, inj.pbar);
        FppfState mid = s;
        mid.psi = next.psi;
        next.xc = loop_newton_step(mid, s.v, k);
        next.v = f_q(mid, k, inj.q_load);
        require_positive_v(next.v, "f_Q result");
      }
      next.iter = s.iter + 1;
      next.mismatch = mismatch(next, k, inj);
      s = std::move(next);
    } catch (const DomainError& e) {
      rep.status = SolveStatus::LeftValidityRegion;
      rep.message = std::string("left validity region at iteration ") + std::to_string(s.iter + 1) + ": " + e.what();
      rep.offending_branch = e.branch();
      if (e.branch()) rep.offending_value = e.value();
      if (e.branch() && *e.branch() < k.graph->edges().size()) {
        const auto [i, j] = k.graph->edges()[*e.branch()];
        rep.message += " (branch between buses " +
                       std::to_string(c.buses[static_cast<std::size_t>(k.order.internal_to_case[static_cast<std::size_t>(i)])].id) +
                       " and " +
                       std::to_string(c.buses[static_cast<std::size_t>(k.order.internal_to_case[static_cast<std::size_t>(j)])].id) + ")";
      }
      rep.failed_iteration = s.iter + 1;
      failed = true;
      break;
    } catch (const NumericalError& e) {
      rep.status = SolveStatus::Singular;
      rep.message = e.what();
      rep.failed_iteration = s.iter + 1;
      failed = true;
      break;
    }
    rep.mismatch_history.push_back(s.mismatch);
    if (!std::isfinite(s.mismatch)) {
      rep.status = SolveStatus::Diverged;
      rep.message = "mismatch is not finite";
      failed = true;
      break;
    }
  }
  rep.iterations = s.iter;
  if (!failed) rep.status = s.mismatch <= opts.tol ? SolveStatus::Converged : SolveStatus::MaxIterations;
  const bool converged = rep.status == SolveStatus::Converged;

  FppfResult out;
  out.solution = make_solution(c, k, inj, s, std::move(rep), converged);
  out.solution.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.state = std::move(s);
  return out;
}

double FixedPointReport::max_residual() const {
  return std::max({active_map, loop, reactive_map, active_balance, reactive_balance});
}

FixedPointReport verify_fixed_point(const Solution& sol, const FppfConstants& k, const Injections& inj) {
  const FppfState s = state_from_voltages(k, sol.vm, sol.theta);
  FixedPointReport rep;
  const Vec h = k.h_of(s.v);
  const Vec zero_xc = Vec::Zero(k.n_cycles);
  // psi = [h]^{-1}(M_B^+ R^T(...) + K xc) is solved for xc in the least-squares sense.
  const Vec particular = active_map(s.psi, s.v, zero_xc, k, inj.pbar).cwiseProduct(h);
  rep.xc = k.n_cycles > 0 ? Vec(k.kernel.transpose() * (h.cwiseProduct(s.psi) - particular)) : zero_xc;
  rep.active_map = inf_norm(s.psi - active_map(s.psi, s.v, rep.xc, k, inj.pbar));
  rep.loop = inf_norm(loop_residual(s.psi, k));
  rep.reactive_map = inf_norm(s.v - f_q(s, k, inj.q_load));
  rep.active_balance = inf_norm(k.reduction.transpose() * (inj.pbar - active_power(s.psi, s.v, k)));
  rep.reactive_balance = inf_norm(inj.q_load - reactive_power_load_stiffness(s.psi, s.v, k));
  return rep;
}

PreparedCase prepare_case(CaseData c) {
  NetworkMatrices nm = build_admittance(c);
  BidirGraph graph = build_graph(c, nm.order);
  AssumptionReport rep = check_assumptions(nm, graph);
  FppfConstants k = build_constants(nm, graph, c);
  Injections inj = make_injections(c, k);
  return PreparedCase{std::move(c), std::move(nm), std::move(graph), std::move(rep), std::move(k), std::move(inj)};
}

}  // namespace fppf
