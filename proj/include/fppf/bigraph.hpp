#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "fppf/netmodel.hpp"
#include "fppf/types.hpp"

namespace fppf {

/// Forward edge (from, to) in internal node numbering.
using Edge = std::pair<Index, Index>;

/// Bidirected graph of the network seen through its forward edges.
///
/// A is the (nodes x edges) incidence matrix with +1 at the tail and -1 at
/// the head of each forward edge, A = A+ - A-. The cycle matrix C holds one
/// fundamental cycle per non-tree edge of a breadth-first spanning tree rooted
/// at node 0, so that A*C = 0 and C has full column rank.
class BidirGraph {
 public:
  BidirGraph(Index node_count, std::vector<Edge> edges);

  Index node_count() const { return node_count_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  Index cycle_count() const { return C_.cols(); }
  const std::vector<Edge>& edges() const { return edges_; }

  const SpMatI& A() const { return A_; }
  const SpMatI& Aplus() const { return Aplus_; }
  const SpMatI& Aminus() const { return Aminus_; }
  SpMatI Aabs() const { return Aplus_ + Aminus_; }
  const SpMatI& C() const { return C_; }

  bool is_tree_edge(Index k) const { return in_tree_[static_cast<std::size_t>(k)]; }

  /// Case branch indices merged into each edge (parallel branches share an edge).
  const std::vector<std::vector<std::size_t>>& edge_branches() const { return edge_branches_; }
  void set_edge_branches(std::vector<std::vector<std::size_t>> eb) { edge_branches_ = std::move(eb); }

  /// Adjacency restricted to spanning-tree edges: (neighbour, edge index).
  const std::vector<std::vector<std::pair<Index, Index>>>& tree_adjacency() const { return tree_adj_; }

 private:
  Index node_count_;
  std::vector<Edge> edges_;
  SpMatI A_, Aplus_, Aminus_, C_;
  std::vector<bool> in_tree_;
  std::vector<std::vector<std::pair<Index, Index>>> tree_adj_;
  std::vector<std::vector<std::size_t>> edge_branches_;
};

/// Graph of the in-service branches in the internal bus ordering. Parallel
/// branches collapse into one edge oriented like the first of them; parallel
/// groups containing a phase shifter are rejected.
BidirGraph build_graph(const CaseData& c, const BusOrdering& order);

struct AWIncidence {
  SpMat gamma;      // A+[w+] - A-[w-]
  SpMat gamma_abs;  // A+[w+] + A-[w-]
  Vec wplus;
  Vec wminus;
};

AWIncidence aw_incidence(const BidirGraph& graph, const Vec& wplus, const Vec& wminus);

enum class KernelSign { NotInKernel, AllPositive, AllNegative, MixedSign };

/// Classify x against ker(Gamma^T): NotInKernel unless
/// ||Gamma^T x||_inf <= 1e-9 ||x||_inf. MixedSign would contradict the
/// single-sign property of connected graphs with positive weights.
KernelSign kernel_sign_check(const AWIncidence& aw, const Vec& x);

void write_matrix_market(std::ostream& os, const SpMatI& m);

}  // namespace fppf
