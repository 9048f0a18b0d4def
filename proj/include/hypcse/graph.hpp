#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hypcse/matrix.hpp"
#include "hypcse/random.hpp"

namespace hypcse::graph {

struct Edge {
  int u = 0;  // u < v
  int v = 0;
  double weight = 0.0;
  bool operator==(const Edge&) const = default;
};

struct Neighbor {
  int vertex = 0;
  double weight = 0.0;
};

/// Undirected weighted graph with per-vertex feature rows.
///
/// Edges are stored once with u < v, sorted lexicographically. No self-loops,
/// no duplicates, strictly positive weights. Degrees and adjacency are
/// derived on construction and the graph is immutable afterwards.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  /// Throws std::invalid_argument on self-loops, duplicates, bad indices or
  /// non-positive weights. Edges may be given in any orientation and order.
  WeightedGraph(int n, std::vector<Edge> edges, Matrix features = {});

  int num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  const std::vector<double>& degrees() const { return degrees_; }
  double degree(int v) const { return degrees_[v]; }
  std::span<const Neighbor> neighbors(int v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  /// Sum of all degrees, i.e. twice the total edge weight.
  double total_volume() const { return total_volume_; }
  bool is_connected() const;

  /// Same topology with a replaced feature matrix.
  WeightedGraph with_features(Matrix features) const;

  /// Subgraph induced by `vertices` (relabelled 0..m-1 in the given order).
  WeightedGraph induced(std::span<const int> vertices) const;

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<double> degrees_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  double total_volume_ = 0.0;
};

/// Vertex subset as a membership mask over [0, n).
class VertexSubset {
 public:
  explicit VertexSubset(int n) : mask_(static_cast<std::size_t>(n), false) {}
  VertexSubset(int n, std::span<const int> members);
  static VertexSubset from_bits(int n, std::uint64_t bits);

  void insert(int v) { mask_.at(static_cast<std::size_t>(v)) = true; }
  bool contains(int v) const { return mask_[static_cast<std::size_t>(v)]; }
  int universe() const { return static_cast<int>(mask_.size()); }

 private:
  std::vector<bool> mask_;
};

/// z-score each column; constant columns become zero.
Matrix standardize_columns(const Matrix& x);

struct KnnOptions {
  int k = 10;
  double sigma = 1.0;
  bool standardize = true;
};

/// Gaussian-kernel similarity graph w = exp(-||xi - xj||^2 / (2 sigma^2)),
/// keeping each vertex's k strongest edges (lower index wins ties) and
/// symmetrizing by union. Features of the result are the original rows.
WeightedGraph build_knn_graph(const Matrix& x, const KnnOptions& options);

double volume(const WeightedGraph& g, const VertexSubset& s);
double cut(const WeightedGraph& g, const VertexSubset& s);

struct ConductanceResult {
  double value = 0.0;
  bool disconnected = false;
};

/// Exhaustive minimum of cut(S) / min(vol S, vol V\S) over nonempty proper
/// subsets. Limited to n <= 20. Disconnected graphs report 0 with the flag set.
ConductanceResult conductance(const WeightedGraph& g);

struct Subgraph {
  std::vector<int> vertices;  // global ids; local id = position
  WeightedGraph graph;
};

/// Neighborhood-preserving sampling for one epoch: floor(n / n_prime) subgraphs
/// of n_prime vertices grown by BFS from n_seed random seeds (strongest edges
/// first), plus one smaller subgraph with the leftovers when n is not a
/// multiple of n_prime. Vertices are never reused within the epoch.
std::vector<Subgraph> subgraph_sample(const WeightedGraph& g, int n_prime, int n_seed,
                                      std::uint64_t rng_seed);

}  // namespace hypcse::graph
