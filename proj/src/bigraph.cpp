#include "fppf/bigraph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <ostream>

#include "fppf/errors.hpp"

namespace fppf {

BidirGraph::BidirGraph(Index node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  const Index ne = edge_count();
  std::map<Edge, Index> seen;
  std::vector<Eigen::Triplet<int>> tp, tm;
  std::vector<std::vector<std::pair<Index, Index>>> adj(static_cast<std::size_t>(node_count_));
  for (Index k = 0; k < ne; ++k) {
    const auto [i, j] = edges_[static_cast<std::size_t>(k)];
    if (i < 0 || j < 0 || i >= node_count_ || j >= node_count_) throw DimensionError("edge endpoint out of range");
    if (i == j) throw ModelError("self loop at node " + std::to_string(i));
    if (!seen.emplace(Edge{std::min(i, j), std::max(i, j)}, k).second)
      throw ModelError("parallel edges between nodes " + std::to_string(i) + " and " + std::to_string(j));
    tp.emplace_back(i, k, 1);
    tm.emplace_back(j, k, 1);
    adj[static_cast<std::size_t>(i)].emplace_back(j, k);
    adj[static_cast<std::size_t>(j)].emplace_back(i, k);
  }
  Aplus_.resize(node_count_, ne);
  Aminus_.resize(node_count_, ne);
  Aplus_.setFromTriplets(tp.begin(), tp.end());
  Aminus_.setFromTriplets(tm.begin(), tm.end());
  A_ = Aplus_ - Aminus_;

  // Breadth-first spanning tree from node 0, neighbours visited in index order.
  for (auto& a : adj) std::sort(a.begin(), a.end());
  std::vector<Index> parent(static_cast<std::size_t>(node_count_), -1);
  std::vector<Index> parent_edge(static_cast<std::size_t>(node_count_), -1);
  std::vector<Index> depth(static_cast<std::size_t>(node_count_), -1);
  in_tree_.assign(static_cast<std::size_t>(ne), false);
  tree_adj_.assign(static_cast<std::size_t>(node_count_), {});
  if (node_count_ > 0) {
    std::deque<Index> queue{0};
    depth[0] = 0;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (const auto& [w, k] : adj[static_cast<std::size_t>(u)]) {
        if (depth[static_cast<std::size_t>(w)] >= 0) continue;
        depth[static_cast<std::size_t>(w)] = depth[static_cast<std::size_t>(u)] + 1;
        parent[static_cast<std::size_t>(w)] = u;
        parent_edge[static_cast<std::size_t>(w)] = k;
        in_tree_[static_cast<std::size_t>(k)] = true;
        tree_adj_[static_cast<std::size_t>(u)].emplace_back(w, k);
        tree_adj_[static_cast<std::size_t>(w)].emplace_back(u, k);
        queue.push_back(w);
      }
    }
  }
  for (Index i = 0; i < node_count_; ++i)
    if (depth[static_cast<std::size_t>(i)] < 0) throw ModelError("graph is not weakly connected");

  // Sign of traversing edge k from node `from`: +1 along its orientation.
  auto dir = [&](Index k, Index from) { return edges_[static_cast<std::size_t>(k)].first == from ? 1 : -1; };

  std::vector<Eigen::Triplet<int>> tc;
  Index col = 0;
  for (Index k = 0; k < ne; ++k) {
    if (in_tree_[static_cast<std::size_t>(k)]) continue;
    // Cycle: i -> j along edge k, then back from j to i through the tree.
    const auto [i, j] = edges_[static_cast<std::size_t>(k)];
    std::map<Index, int> entries{{k, 1}};
    Index a = j, b = i;
    while (a != b) {
      if (depth[static_cast<std::size_t>(a)] >= depth[static_cast<std::size_t>(b)]) {
        const Index e = parent_edge[static_cast<std::size_t>(a)];
        entries[e] += dir(e, a);
        a = parent[static_cast<std::size_t>(a)];
      } else {
        const Index e = parent_edge[static_cast<std::size_t>(b)];
        entries[e] += dir(e, parent[static_cast<std::size_t>(b)]);
        b = parent[static_cast<std::size_t>(b)];
      }
    }
    for (const auto& [e, v] : entries)
      if (v != 0) tc.emplace_back(e, col, v);
    ++col;
  }
  C_.resize(ne, col);
  C_.setFromTriplets(tc.begin(), tc.end());
}

BidirGraph build_graph(const CaseData& c, const BusOrdering& order) {
  std::map<Edge, std::size_t> index;
  std::vector<Edge> edges;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t b = 0; b < c.branches.size(); ++b) {
    const auto& br = c.branches[b];
    if (!br.in_service) continue;
    const Index f = order.case_to_internal[static_cast<std::size_t>(c.bus_index(br.from))];
    const Index t = order.case_to_internal[static_cast<std::size_t>(c.bus_index(br.to))];
    const Edge key{std::min(f, t), std::max(f, t)};
    auto [it, fresh] = index.emplace(key, edges.size());
    if (fresh) {
      edges.emplace_back(f, t);
      members.push_back({b});
    } else {
      members[it->second].push_back(b);
    }
  }
  for (const auto& group : members) {
    if (group.size() < 2) continue;
    for (std::size_t b : group) {
      if (c.branches[b].shift != 0.0) {
        const auto& br = c.branches[b];
        throw ModelError("parallel branches " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                         " include a phase shifter and cannot be merged");
      }
    }
  }
  BidirGraph g(c.bus_count(), std::move(edges));
  g.set_edge_branches(std::move(members));
  return g;
}

AWIncidence aw_incidence(const BidirGraph& graph, const Vec& wplus, const Vec& wminus) {
  const Index ne = graph.edge_count();
  if (wplus.size() != ne || wminus.size() != ne)
    throw DimensionError("weight vectors must have one entry per edge (" + std::to_string(ne) + ")");
  AWIncidence aw;
  aw.wplus = wplus;
  aw.wminus = wminus;
  std::vector<Eigen::Triplet<double>> t, ta;
  for (Index k = 0; k < ne; ++k) {
    const auto [i, j] = graph.edges()[static_cast<std::size_t>(k)];
    t.emplace_back(i, k, wplus[k]);
    t.emplace_back(j, k, -wminus[k]);
    ta.emplace_back(i, k, wplus[k]);
    ta.emplace_back(j, k, wminus[k]);
  }
  aw.gamma.resize(graph.node_count(), ne);
  aw.gamma_abs.resize(graph.node_count(), ne);
  aw.gamma.setFromTriplets(t.begin(), t.end());
  aw.gamma_abs.setFromTriplets(ta.begin(), ta.end());
  return aw;
}

KernelSign kernel_sign_check(const AWIncidence& aw, const Vec& x) {
  if (x.size() != aw.gamma.rows()) throw DimensionError("vector length must equal the node count");
  const double scale = x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) throw PreconditionError("kernel_sign_check needs a nonzero vector");
  if ((aw.wplus.array() <= 0.0).any() || (aw.wminus.array() <= 0.0).any())
    throw PreconditionError("kernel_sign_check needs strictly positive weights");

  const Vec r = aw.gamma.transpose() * x;
  if (r.size() > 0 && r.cwiseAbs().maxCoeff() > 1e-9 * scale) return KernelSign::NotInKernel;
  const double tol = 1e-9 * scale;
  if ((x.array() > tol).all()) return KernelSign::AllPositive;
  if ((x.array() < -tol).all()) return KernelSign::AllNegative;
  return KernelSign::MixedSign;
}

void write_matrix_market(std::ostream& os, const SpMatI& m) {
  os << "%%MatrixMarket matrix coordinate integer general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index col = 0; col < m.outerSize(); ++col)
    for (SpMatI::InnerIterator it(m, col); it; ++it) os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace fppf
