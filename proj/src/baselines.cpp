#include "fppf/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "fppf/errors.hpp"

namespace fppf {

namespace {

using Clock = std::chrono::steady_clock;

// Index bookkeeping shared by both baselines, all in the internal ordering.
struct Partition {
  Index n_load = 0;
  Index slack = 0;
  std::vector<Index> pvpq;  // angle unknowns
  std::vector<Index> pos;   // bus -> position in pvpq, -1 for the slack
};

Partition make_partition(const CaseData& c, const NetworkMatrices& nm) {
  if (c.distributed_slack()) throw PreconditionError("the Newton-Raphson and fast-decoupled solvers need a single slack bus");
  Partition p;
  p.n_load = nm.order.n_load;
  p.slack = nm.order.case_to_internal[static_cast<std::size_t>(c.bus_index(c.slack_bus))];
  const Index N = nm.order.size();
  p.pos.assign(static_cast<std::size_t>(N), -1);
  // Load buses first keeps pvpq ordered like MATPOWER's [pv; pq] up to a permutation.
  for (Index i = 0; i < N; ++i) {
    if (i == p.slack) continue;
    p.pos[static_cast<std::size_t>(i)] = static_cast<Index>(p.pvpq.size());
    p.pvpq.push_back(i);
  }
  return p;
}

struct Start {
  Vec vm, va;  // internal ordering
  VecC sbus;   // scheduled injections; Q is meaningless on generator buses
};

Start make_start(const CaseData& c, const NetworkMatrices& nm, const VoltageGuess& init, bool flat) {
  const VoltageGuess g = flat ? flat_guess(c) : init;
  const Index N = c.bus_count();
  if (g.vm.size() != N || g.va.size() != N) throw DimensionError("initial voltages must cover every bus");
  const Vec p = c.scheduled_p();
  const Vec q = c.scheduled_q();
  Start s;
  s.vm.resize(N);
  s.va.resize(N);
  s.sbus.resize(N);
  for (Index i = 0; i < N; ++i) {
    const Index ci = nm.order.internal_to_case[static_cast<std::size_t>(i)];
    const auto& bus = c.buses[static_cast<std::size_t>(ci)];
    s.vm[i] = bus.kind == BusKind::PV ? bus.Vm : g.vm[ci];
    s.va[i] = g.va[ci];
    s.sbus[i] = Complex(p[ci], q[ci]);
  }
  return s;
}

VecC polar(const Vec& vm, const Vec& va) {
  VecC v(vm.size());
  for (Index i = 0; i < vm.size(); ++i) v[i] = std::polar(vm[i], va[i]);
  return v;
}

// Real mismatch vector [dP(pvpq); dQ(pq)] of S - Sbus, optionally divided by |V|.
Vec mismatch_vector(const SpMatC& Y, const VecC& V, const Start& st, const Partition& p, bool per_vm) {
  VecC mis = bus_injections(Y, V) - st.sbus;
  if (per_vm) mis = mis.cwiseQuotient(V.cwiseAbs().cast<Complex>());
  const Index np = static_cast<Index>(p.pvpq.size());
  Vec f(np + p.n_load);
  for (Index k = 0; k < np; ++k) f[k] = mis[p.pvpq[static_cast<std::size_t>(k)]].real();
  for (Index i = 0; i < p.n_load; ++i) f[np + i] = mis[i].imag();
  return f;
}

double inf_norm(const Vec& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

Solution finish(const CaseData& c, const NetworkMatrices& nm, const Partition& p, const VecC& V, SolveReport rep,
                Clock::time_point t0) {
  Solution sol;
  sol.base_mva = c.base_mva;
  const Index N = c.bus_count();
  for (const auto& b : c.buses) sol.bus_ids.push_back(b.id);
  sol.vm.resize(N);
  sol.theta.resize(N);
  const Index ref_case = c.bus_index(c.slack_bus);
  const double shift = c.buses[static_cast<std::size_t>(ref_case)].Va - std::arg(V[p.slack]);
  for (Index i = 0; i < N; ++i) {
    const Index ci = nm.order.internal_to_case[static_cast<std::size_t>(i)];
    sol.vm[ci] = std::abs(V[i]);
    sol.theta[ci] = std::arg(V[i]) + shift;
  }
  const VecC s = bus_injections(nm.Y, V);
  const Vec pbar = c.scheduled_p();
  sol.qg.resize(nm.order.n_gen);
  double ps = 0.0;
  for (Index i = 0; i < N; ++i) {
    const Index ci = nm.order.internal_to_case[static_cast<std::size_t>(i)];
    ps += s[i].real() - pbar[ci];
    if (i >= nm.order.n_load) {
      const auto& bus = c.buses[static_cast<std::size_t>(ci)];
      sol.gen_bus_ids.push_back(bus.id);
      sol.qg[i - nm.order.n_load] = s[i].imag() + bus.Qd;
    }
  }
  sol.ps = ps;
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  sol.report = std::move(rep);
  return sol;
}

SpMat principal_block(const SpMat& m, const std::vector<Index>& idx) {
  std::vector<Index> pos(static_cast<std::size_t>(m.rows()), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) pos[static_cast<std::size_t>(idx[k])] = static_cast<Index>(k);
  std::vector<Eigen::Triplet<double>> t;
  for (Index col = 0; col < m.outerSize(); ++col)
    for (SpMat::InnerIterator it(m, col); it; ++it) {
      const Index r = pos[static_cast<std::size_t>(it.row())];
      const Index cc = pos[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) t.emplace_back(r, cc, it.value());
    }
  SpMat out(static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

VecC bus_injections(const SpMatC& Y, const VecC& V) { return V.cwiseProduct((Y * V).conjugate()); }

VoltageGuess flat_guess(const CaseData& c) {
  VoltageGuess g;
  g.vm = Vec::Ones(c.bus_count());
  g.va = Vec::Zero(c.bus_count());
  for (Index i = 0; i < c.bus_count(); ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    if (b.kind == BusKind::PV) g.vm[i] = b.Vm;
  }
  return g;
}

Solution solve_nr(const CaseData& c, const NetworkMatrices& nm, const VoltageGuess& init, const NrOptions& opts) {
  const auto t0 = Clock::now();
  const Partition p = make_partition(c, nm);
  const Start st = make_start(c, nm, init, opts.flat_start);
  const SpMatC& Y = nm.Y;
  const Index np = static_cast<Index>(p.pvpq.size());
  const Index n = p.n_load;

  Vec vm = st.vm, va = st.va;
  VecC V = polar(vm, va);
  SolveReport rep;
  rep.algorithm = Algorithm::NewtonRaphson;
  Vec f = mismatch_vector(Y, V, st, p, false);
  rep.mismatch_history.push_back(inf_norm(f));

  int it = 0;
  bool failed = false;
  while (rep.mismatch_history.back() > opts.tol && it < opts.max_iter) {
    ++it;
    const VecC I = Y * V;
    const VecC Vnorm = V.cwiseQuotient(V.cwiseAbs().cast<Complex>());
    // dS/dVa = j [V] conj([I] - Y [V]),  dS/dVm = [V] conj(Y [V/|V|]) + conj([I]) [V/|V|]
    const VecC jV = Complex(0.0, 1.0) * V;
    const SpMatC diag_i = SpMatC(I.asDiagonal());
    const SpMatC y_v = Y * V.asDiagonal();
    const SpMatC dva = jV.asDiagonal() * SpMatC((diag_i - y_v).conjugate());
    const SpMatC y_vn = Y * Vnorm.asDiagonal();
    const VecC ivn = I.conjugate().cwiseProduct(Vnorm);
    const SpMatC dvm = SpMatC(V.asDiagonal() * SpMatC(y_vn.conjugate())) + SpMatC(ivn.asDiagonal());

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(2 * (dva.nonZeros() + dvm.nonZeros())));
    for (Index col = 0; col < dva.outerSize(); ++col) {
      const Index jc = p.pos[static_cast<std::size_t>(col)];
      if (jc < 0) continue;
      for (SpMatC::InnerIterator e(dva, col); e; ++e) {
        const Index r = e.row();
        const Index ir = p.pos[static_cast<std::size_t>(r)];
        if (ir >= 0) t.emplace_back(ir, jc, e.value().real());
        if (r < n) t.emplace_back(np + r, jc, e.value().imag());
      }
    }
    for (Index col = 0; col < n; ++col) {
      for (SpMatC::InnerIterator e(dvm, col); e; ++e) {
        const Index r = e.row();
        const Index ir = p.pos[static_cast<std::size_t>(r)];
        if (ir >= 0) t.emplace_back(ir, np + col, e.value().real());
        if (r < n) t.emplace_back(np + r, np + col, e.value().imag());
      }
    }
    SpMat J(np + n, np + n);
    J.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) {
      rep.status = SolveStatus::Singular;
      rep.message = "singular Jacobian";
      rep.failed_iteration = it;
      failed = true;
      --it;
      break;
    }
    const Vec dx = -lu.solve(f);
    if (!dx.allFinite()) {
      rep.status = SolveStatus::Singular;
      rep.message = "singular Jacobian";
      rep.failed_iteration = it;
      failed = true;
      --it;
      break;
    }
    for (Index k = 0; k < np; ++k) va[p.pvpq[static_cast<std::size_t>(k)]] += dx[k];
    for (Index i = 0; i < n; ++i) vm[i] += dx[np + i];
    V = polar(vm, va);
    vm = V.cwiseAbs();
    for (Index i = 0; i < V.size(); ++i) va[i] = std::arg(V[i]);
    f = mismatch_vector(Y, V, st, p, false);
    rep.mismatch_history.push_back(inf_norm(f));
    if (!std::isfinite(rep.mismatch_history.back())) {
      rep.status = SolveStatus::Diverged;
      rep.message = "mismatch is not finite";
      failed = true;
      break;
    }
  }
  rep.iterations = it;
  if (!failed) rep.status = rep.mismatch_history.back() <= opts.tol ? SolveStatus::Converged : SolveStatus::MaxIterations;
  return finish(c, nm, p, V, std::move(rep), t0);
}

Solution solve_fdlf(const CaseData& c, const NetworkMatrices& nm, const VoltageGuess& init, const NrOptions& opts,
                    FdlfScheme scheme) {
  const auto t0 = Clock::now();
  const Partition p = make_partition(c, nm);
  const Start st = make_start(c, nm, init, opts.flat_start);
  const Index np = static_cast<Index>(p.pvpq.size());
  const Index n = p.n_load;

  YbusOptions bp_opts;
  bp_opts.zero_charging = true;
  bp_opts.zero_bus_shunts = true;
  bp_opts.unit_taps = true;
  bp_opts.zero_shifts = true;
  YbusOptions bpp_opts;
  bpp_opts.zero_shifts = true;
  if (scheme == FdlfScheme::XB)
    bp_opts.zero_resistance = true;
  else
    bpp_opts.zero_resistance = true;

  const SpMat bp_full = SpMat(-assemble_ybus(c, nm.order, bp_opts).imag());
  const SpMat bpp_full = SpMat(-assemble_ybus(c, nm.order, bpp_opts).imag());
  std::vector<Index> pq(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pq[static_cast<std::size_t>(i)] = i;

  Eigen::SparseLU<SpMat> lup, luq;
  lup.compute(principal_block(bp_full, p.pvpq));
  if (n > 0) luq.compute(principal_block(bpp_full, pq));

  Vec vm = st.vm, va = st.va;
  VecC V = polar(vm, va);
  SolveReport rep;
  rep.algorithm = Algorithm::FastDecoupled;

  auto fail = [&](SolveStatus s, const char* msg) {
    rep.status = s;
    rep.message = msg;
  };
  if (lup.info() != Eigen::Success || (n > 0 && luq.info() != Eigen::Success)) {
    fail(SolveStatus::Singular, "singular B' or B'' matrix");
    rep.mismatch_history.push_back(inf_norm(mismatch_vector(nm.Y, V, st, p, true)));
    return finish(c, nm, p, V, std::move(rep), t0);
  }

  Vec f = mismatch_vector(nm.Y, V, st, p, true);
  rep.mismatch_history.push_back(inf_norm(f));
  int it = 0;
  bool done = rep.mismatch_history.back() <= opts.tol;
  bool failed = false;
  while (!done && it < opts.max_iter) {
    ++it;
    const Vec dva = -lup.solve(Vec(f.head(np)));
    for (Index k = 0; k < np; ++k) va[p.pvpq[static_cast<std::size_t>(k)]] += dva[k];
    V = polar(vm, va);
    f = mismatch_vector(nm.Y, V, st, p, true);
    if (inf_norm(f) <= opts.tol) {
      rep.mismatch_history.push_back(inf_norm(f));
      done = true;
      break;
    }
    if (n > 0) {
      const Vec dvm = -luq.solve(Vec(f.tail(n)));
      vm.head(n) += dvm;
      V = polar(vm, va);
      f = mismatch_vector(nm.Y, V, st, p, true);
    }
    rep.mismatch_history.push_back(inf_norm(f));
    if (!std::isfinite(rep.mismatch_history.back())) {
      fail(SolveStatus::Diverged, "mismatch is not finite");
      failed = true;
      break;
    }
    done = rep.mismatch_history.back() <= opts.tol;
  }
  rep.iterations = it;
  if (!failed) rep.status = done ? SolveStatus::Converged : SolveStatus::MaxIterations;
  return finish(c, nm, p, V, std::move(rep), t0);
}

}  // namespace fppf
