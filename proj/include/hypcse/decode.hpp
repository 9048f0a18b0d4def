#pragma once

// Dendrogram decoding from Poincare embeddings.
//
// Points are pushed to a common radius, and clusters are agglomerated by
// single linkage on the geodesic-origin distance read as a similarity: the
// pair whose geodesic stays deepest merges first. Ties go to the smallest
// (min index, max index) vertex pair.

#include <span>
#include <vector>

#include "hypcse/geometry.hpp"
#include "hypcse/matrix.hpp"
#include "hypcse/tree.hpp"

namespace hypcse::decode {

inline constexpr double kRhoMax = 0.999;

/// Rescales every point to Euclidean norm rho_max. A zero point gets a
/// direction drawn from a generator seeded by its index, with a warning.
std::vector<geometry::PoincareVec> normalize_to_boundary(std::span<const geometry::PoincareVec> z,
                                                         double rho_max = kRhoMax);

/// max over (i in A, j in B) of geodesic_origin_distance(z_i, z_j).
double closeness(std::span<const int> a, std::span<const int> b,
                 std::span<const geometry::PoincareVec> z);

/// Candidate merge edge between two vertices.
struct ScoredPair {
  double score = 0.0;
  int i = 0;  // i < j
  int j = 0;
};

/// Kruskal over pairs in order (score descending, then (i, j) ascending);
/// each accepted pair merges its two clusters. Throws std::invalid_argument
/// if the pairs do not connect all n vertices.
tree::Dendrogram kruskal_dendrogram(int n, std::vector<ScoredPair> pairs);

/// Agglomeration over cluster closeness, one merge per step until two
/// clusters remain; those two become the root's children. Normalizes a copy
/// of the input first.
tree::Dendrogram decode_tree_naive(std::span<const geometry::PoincareVec> z,
                                   double rho_max = kRhoMax);

/// Kruskal on the K-nearest-neighbor graph of the normalized points. On a
/// common radius the geodesic-origin distance decreases with Euclidean
/// distance, so neighbors come from a kd-tree and pairs are scored exactly.
/// A disconnected neighbor graph is completed with the best cross-component
/// pairs, with a warning.
tree::Dendrogram decode_tree_fast(std::span<const geometry::PoincareVec> z, int k,
                                  double rho_max = kRhoMax);

/// Reference baseline: single linkage on Euclidean distances between rows.
tree::Dendrogram euclidean_single_linkage(const Matrix& x);

/// K nearest rows (Euclidean, excluding the query) for every row, nearest
/// first; equal distances resolve to the lower index.
std::vector<std::vector<int>> knn_indices(const Matrix& x, int k);

}  // namespace hypcse::decode
