#include "fppf/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <Eigen/SparseLU>

#include "fppf/bigraph.hpp"
#include "fppf/errors.hpp"

namespace fppf {

Index CaseData::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<Index>(i);
  throw ModelError("unknown bus id " + std::to_string(id));
}

Vec CaseData::scheduled_p() const {
  Vec p(bus_count());
  for (Index i = 0; i < bus_count(); ++i) p[i] = -buses[static_cast<std::size_t>(i)].Pd;
  for (const auto& g : gens) p[bus_index(g.bus)] += g.Pg;
  return p;
}

Vec CaseData::scheduled_q() const {
  Vec q(bus_count());
  for (Index i = 0; i < bus_count(); ++i) q[i] = -buses[static_cast<std::size_t>(i)].Qd;
  for (const auto& g : gens) q[bus_index(g.bus)] += g.Qg;
  return q;
}

bool CaseData::distributed_slack() const {
  const Index s = bus_index(slack_bus);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double expect = static_cast<Index>(i) == s ? 1.0 : 0.0;
    if (std::abs(alpha[i] - expect) > 1e-12) return true;
  }
  return false;
}

Index CaseData::reference_bus_index() const {
  if (!distributed_slack()) return bus_index(slack_bus);
  return static_cast<Index>(std::max_element(alpha.begin(), alpha.end()) - alpha.begin());
}

namespace {

struct DisjointSets {
  std::vector<Index> parent;
  explicit DisjointSets(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }
  Index find(Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      auto& p = parent[static_cast<std::size_t>(i)];
      p = parent[static_cast<std::size_t>(p)];
      i = p;
    }
    return i;
  }
  bool unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

}  // namespace

void validate_case(const CaseData& c) {
  if (c.buses.empty()) throw ModelError("case has no buses");
  if (!(c.base_mva > 0.0)) throw ModelError("baseMVA must be positive");

  std::unordered_set<int> ids;
  for (const auto& b : c.buses) {
    if (!ids.insert(b.id).second) throw ModelError("duplicate bus id " + std::to_string(b.id));
    if (b.kind == BusKind::PV && !(b.Vm > 0.0))
      throw ModelError("nonpositive voltage setpoint at PV bus " + std::to_string(b.id));
  }
  if (!ids.count(c.slack_bus)) throw ModelError("no reference bus");
  if (c.buses[static_cast<std::size_t>(c.bus_index(c.slack_bus))].kind != BusKind::PV)
    throw ModelError("reference bus must be a generator bus");

  for (const auto& g : c.gens)
    if (!ids.count(g.bus)) throw ModelError("generator at unknown bus " + std::to_string(g.bus));

  if (c.alpha.size() != c.buses.size()) throw ModelError("participation vector has wrong length");
  double total = 0.0;
  for (std::size_t i = 0; i < c.alpha.size(); ++i) {
    if (c.alpha[i] < 0.0) throw ModelError("negative participation factor at bus " + std::to_string(c.buses[i].id));
    if (c.alpha[i] > 0.0 && c.buses[i].kind != BusKind::PV)
      throw ModelError("participation factor on load bus " + std::to_string(c.buses[i].id));
    total += c.alpha[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ModelError("participation factors must sum to 1");

  DisjointSets sets(c.bus_count());
  Index components = c.bus_count();
  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    if (!ids.count(br.from) || !ids.count(br.to))
      throw ModelError("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) + " references unknown bus");
    if (br.from == br.to) throw ModelError("self-loop branch at bus " + std::to_string(br.from));
    if (!(br.tap > 0.0)) throw ModelError("nonpositive tap ratio on branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
    if (sets.unite(c.bus_index(br.from), c.bus_index(br.to))) --components;
  }
  if (components != 1)
    throw ModelError("network is disconnected (" + std::to_string(components) + " islands)");
}

RxCapResult cap_rx_ratios(CaseData c, double cap) {
  if (!(cap > 0.0)) throw PreconditionError("R/X cap must be positive");
  int modified = 0;
  for (auto& br : c.branches) {
    if (br.x > 0.0 && br.r > cap * br.x) {
      br.r = cap * br.x;
      ++modified;
    }
  }
  return {std::move(c), modified};
}

CaseData scale_loading(CaseData c, double factor) {
  for (auto& b : c.buses) {
    b.Pd *= factor;
    b.Qd *= factor;
  }
  for (auto& g : c.gens) g.Pg *= factor;
  return c;
}

BusOrdering make_ordering(const CaseData& c) {
  BusOrdering o;
  const Index n = c.bus_count();
  o.case_to_internal.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i)
    if (c.buses[static_cast<std::size_t>(i)].kind == BusKind::PQ) o.internal_to_case.push_back(i);
  o.n_load = static_cast<Index>(o.internal_to_case.size());
  for (Index i = 0; i < n; ++i)
    if (c.buses[static_cast<std::size_t>(i)].kind == BusKind::PV) o.internal_to_case.push_back(i);
  o.n_gen = n - o.n_load;
  for (Index k = 0; k < n; ++k) o.case_to_internal[static_cast<std::size_t>(o.internal_to_case[static_cast<std::size_t>(k)])] = k;
  return o;
}

SpMatC assemble_ybus(const CaseData& c, const BusOrdering& order, const YbusOptions& opts) {
  const Index n = c.bus_count();
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(4 * c.branches.size() + static_cast<std::size_t>(n));
  const Complex j(0.0, 1.0);

  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    const double r = opts.zero_resistance ? 0.0 : br.r;
    if (br.x == 0.0 && r == 0.0)
      throw ModelError("zero-impedance branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
    if (br.x == 0.0)
      throw ModelError("zero-reactance branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
    const Complex ys = 1.0 / Complex(r, br.x);
    const double bc = opts.zero_charging ? 0.0 : br.b_c;
    const double t = opts.unit_taps ? 1.0 : br.tap;
    const double shift = opts.zero_shifts ? 0.0 : br.shift;
    const Complex tau = std::polar(t, shift);

    const Index f = order.case_to_internal[static_cast<std::size_t>(c.bus_index(br.from))];
    const Index to = order.case_to_internal[static_cast<std::size_t>(c.bus_index(br.to))];
    trip.emplace_back(f, f, (ys + j * (bc / 2.0)) / (t * t));
    trip.emplace_back(to, to, ys + j * (bc / 2.0));
    trip.emplace_back(f, to, -ys / std::conj(tau));
    trip.emplace_back(to, f, -ys / tau);
  }
  if (!opts.zero_bus_shunts) {
    for (Index i = 0; i < n; ++i) {
      const auto& b = c.buses[static_cast<std::size_t>(i)];
      if (b.Gs != 0.0 || b.Bs != 0.0) {
        const Index k = order.case_to_internal[static_cast<std::size_t>(i)];
        trip.emplace_back(k, k, Complex(b.Gs, b.Bs));
      }
    }
  }
  SpMatC Y(n, n);
  Y.setFromTriplets(trip.begin(), trip.end());
  return Y;
}

NetworkMatrices build_admittance(const CaseData& c) {
  NetworkMatrices nm;
  nm.order = make_ordering(c);
  for (Index k : nm.order.internal_to_case) nm.bus_ids.push_back(c.buses[static_cast<std::size_t>(k)].id);
  nm.Y = assemble_ybus(c, nm.order);
  nm.G = nm.Y.real();
  nm.B = nm.Y.imag();
  nm.G.prune(0.0);
  nm.B.prune(0.0);

  const Index n = nm.order.n_load;
  const Index m = nm.order.n_gen;
  nm.B_LL = nm.B.block(0, 0, n, n);
  nm.B_LG = nm.B.block(0, n, n, m);
  nm.B_GL = nm.B.block(n, 0, m, n);
  nm.B_GG = nm.B.block(n, n, m, m);
  nm.Gdiag = Vec(nm.G.diagonal());
  nm.Bdiag = Vec(nm.B.diagonal());

  for (const auto& br : c.branches) {
    const Complex ys = 1.0 / Complex(br.r, br.x);
    BranchAdmittance ba;
    ba.from = nm.order.case_to_internal[static_cast<std::size_t>(c.bus_index(br.from))];
    ba.to = nm.order.case_to_internal[static_cast<std::size_t>(c.bus_index(br.to))];
    ba.g = ys.real();
    ba.b = -ys.imag();
    ba.shift = br.shift;
    nm.branches.push_back(ba);
  }
  return nm;
}

AssumptionReport check_assumptions(const NetworkMatrices& nm, const BidirGraph& graph) {
  AssumptionReport rep;
  const Index n = nm.order.n_load;

  rep.worst_margin = std::numeric_limits<double>::infinity();
  Vec offdiag = Vec::Zero(n);
  Vec diag = Vec::Zero(n);
  for (Index col = 0; col < nm.B_LL.outerSize(); ++col) {
    for (SpMat::InnerIterator it(nm.B_LL, col); it; ++it) {
      if (it.row() == it.col())
        diag[it.row()] = std::abs(it.value());
      else
        offdiag[it.row()] += std::abs(it.value());
    }
  }
  for (Index i = 0; i < n; ++i) {
    const double margin = diag[i] - offdiag[i];
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_bus = nm.bus_ids[static_cast<std::size_t>(i)];
    }
  }
  rep.row_dominant = n == 0 || rep.worst_margin > 0.0;

  rep.diag_dominant = n == 0;
  if (n > 0) {
    bool z_matrix = true;
    for (Index col = 0; col < nm.B_LL.outerSize(); ++col)
      for (SpMat::InnerIterator it(nm.B_LL, col); it; ++it)
        if (it.row() != it.col() && it.value() < 0.0) z_matrix = false;
    Eigen::SparseLU<SpMat> lu;
    lu.compute(SpMat(-nm.B_LL));
    if (z_matrix && lu.info() == Eigen::Success) {
      const Vec x = lu.solve(Vec::Ones(n));
      rep.scaled_margin = x.minCoeff();
      rep.diag_dominant = x.allFinite() && rep.scaled_margin > 0.0;
    }
  }

  for (std::size_t k = 0; k < graph.edges().size(); ++k) {
    const auto [i, j] = graph.edges()[k];
    if (!(nm.B.coeff(i, j) > 0.0 && nm.B.coeff(j, i) > 0.0)) rep.nonpositive_edges.push_back(k);
  }
  rep.offdiag_positive = rep.nonpositive_edges.empty();

  for (std::size_t k = 0; k < nm.branches.size(); ++k) {
    const auto& br = nm.branches[k];
    if (br.shift == 0.0) continue;
    // b cos(ts) -/+ g sin(ts) > 0 on both sides of the transformer.
    const bool ok = br.b * std::cos(br.shift) - br.g * std::abs(std::sin(br.shift)) > 0.0;
    if (!ok) rep.pst_violations.push_back(k);
  }
  rep.pst_ratio_ok = rep.pst_violations.empty();
  return rep;
}

}  // namespace fppf
