#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hypcse/graph.hpp"
#include "hypcse/tree.hpp"

namespace hypcse::entropy {

/// Per-node volume (sum of vertex degrees) and cut (weight leaving the
/// node's vertex set) of a partitioning tree over a graph.
struct TreeStats {
  std::vector<double> volume;
  std::vector<double> cut;
};

/// Throws DataError if the tree's leaves do not match the graph's vertices.
TreeStats tree_stats(const graph::WeightedGraph& g, const tree::PartitionTree& t);

/// Structural entropy as a sum over non-root nodes of
/// -(g_a / vol G) log2(vol a / vol parent(a)); zero-cut nodes contribute 0.
double structural_entropy(const graph::WeightedGraph& g, const tree::PartitionTree& t);

/// Shannon entropy (bits) of the degree distribution.
double one_dim_entropy(const graph::WeightedGraph& g);

/// Structural entropy written through LCA volumes:
/// (2/vol G) sum_edges w log2 vol(lca) - (1/vol G) sum_i d_i log2 d_i.
double structural_entropy_lca(const graph::WeightedGraph& g, const tree::PartitionTree& t);

/// sum_edges w_ij log2(d_i + d_j + sum_{k != i,j} d_k [k below lca(i,j)]),
/// i.e. sum_edges w_ij log2 vol(lca(i,j)).
double se_cost(const graph::WeightedGraph& g, const tree::PartitionTree& t);

/// The tree-independent term (1/vol G) sum_i d_i log2 d_i.
double leaf_term(const graph::WeightedGraph& g);

struct MinimumTree {
  tree::PartitionTree tree;
  double entropy = 0.0;
};

/// Exhaustive minimum structural entropy. All hierarchies for n <= 7,
/// binary hierarchies for n <= 9; throws std::invalid_argument beyond that.
/// Enumeration order is fixed, and the first minimizer wins.
MinimumTree min_se_bruteforce(const graph::WeightedGraph& g, bool binary_only);

/// Calls `visit` for every rooted hierarchy on n leaves (each internal node
/// has >= 2 children), or only the binary ones. Trees are generated by
/// inserting leaves 0, 1, ... in order, each exactly once.
void enumerate_trees(int n, bool binary_only,
                     const std::function<void(const tree::PartitionTree&)>& visit);

/// structural_entropy / one_dim_entropy >= conductance - 1e-9.
bool check_conductance_bound(const graph::WeightedGraph& g, const tree::PartitionTree& t);

/// Mean over same-label unordered pairs of the purity of their LCA's leaf
/// set with respect to the pair's class. Throws std::invalid_argument if no
/// class has two members.
double dendrogram_purity(const tree::PartitionTree& t, std::span<const int> labels);

/// sum_edges w_ij |leaves(lca(i, j))|.
double dasgupta_cost(const graph::WeightedGraph& g, const tree::PartitionTree& t);

}  // namespace hypcse::entropy
