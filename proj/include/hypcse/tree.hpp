#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hypcse::tree {

/// One bottom-up merge: clusters `a` and `b` join into cluster `id`.
/// Leaves are ids 0..n-1; the t-th merge creates id n+t.
struct Merge {
  int a = 0;
  int b = 0;
  int id = 0;
  bool operator==(const Merge&) const = default;
};

/// Binary hierarchy over n leaves stored as n-1 merges; the last merge is
/// the root.
struct Dendrogram {
  int num_leaves = 0;
  std::vector<Merge> merges;

  /// Throws std::invalid_argument unless every cluster id is used exactly
  /// once as a child and the merge list forms a single binary tree.
  void validate() const;
};

/// Rooted tree whose leaves are graph vertices. Node 0..size-1; leaves carry
/// the vertex they hold, internal nodes carry -1.
class PartitionTree {
 public:
  struct Node {
    int parent = -1;
    std::vector<int> children;
    int vertex = -1;
  };

  PartitionTree() = default;

  /// Builds from a parent array (root has parent -1) and a per-node vertex
  /// id (-1 for internal nodes). Throws std::invalid_argument if the shape is
  /// not a valid partitioning tree (one root, leaves hold distinct vertices
  /// 0..n-1, internal nodes have children).
  PartitionTree(std::vector<int> parent, std::vector<int> vertex_of_node);

  static PartitionTree from_dendrogram(const Dendrogram& d);
  /// Root with n leaf children.
  static PartitionTree flat(int n);

  int size() const { return static_cast<int>(nodes_.size()); }
  int root() const { return root_; }
  int num_leaves() const { return static_cast<int>(leaf_of_.size()); }
  const Node& node(int id) const { return nodes_[id]; }
  int leaf_of(int vertex) const { return leaf_of_.at(static_cast<std::size_t>(vertex)); }
  int depth(int id) const { return depth_[id]; }
  /// Nodes ordered so that every child precedes its parent.
  const std::vector<int>& postorder() const { return postorder_; }
  /// Number of leaves below each node.
  const std::vector<int>& leaf_counts() const { return leaf_counts_; }
  bool is_binary() const;

  /// Converts a binary tree back to a merge list (children merged before
  /// parents, lower-id child first).
  Dendrogram to_dendrogram() const;

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<int> leaf_of_;
  std::vector<int> depth_;
  std::vector<int> postorder_;
  std::vector<int> leaf_counts_;
};

/// Lowest-common-ancestor queries by binary lifting.
class LcaIndex {
 public:
  explicit LcaIndex(const PartitionTree& tree);
  int lca_nodes(int a, int b) const;
  /// LCA of the leaves holding vertices i and j. Throws std::out_of_range
  /// for invalid vertices.
  int lca_vertices(int i, int j) const;

 private:
  const PartitionTree* tree_;
  std::vector<std::vector<int>> up_;
};

/// Newick text with leaf names = vertex ids, e.g. "((0,1),2);".
std::string to_newick(const PartitionTree& tree);
/// Leaf labels must be the integers 0..n-1; branch lengths and internal
/// labels are accepted and ignored. Throws std::invalid_argument on malformed
/// input.
PartitionTree parse_newick(std::string_view text);

/// JSON merge list: [[a, b, id], ...].
std::string merges_to_json(const Dendrogram& d);

/// Canonical nested-set signature: for every internal node, the sorted set
/// of vertices below it. Two trees with equal signatures have identical
/// structure regardless of node numbering.
std::vector<std::vector<int>> cluster_signature(const PartitionTree& tree);

}  // namespace hypcse::tree
