#pragma once

// Continuous structural entropy: the softmax relaxation of the LCA volume,
// the centroid regularizer and the combined objective. Every loss has a
// plain double evaluation and a taped evaluation for training.

#include <array>
#include <span>
#include <vector>

#include "hypcse/autodiff.hpp"
#include "hypcse/geometry.hpp"
#include "hypcse/graph.hpp"
#include "hypcse/matrix.hpp"
#include "hypcse/tree.hpp"

namespace hypcse::cse {

struct EmbeddingSet {
  std::vector<geometry::PoincareVec> points;
  std::vector<geometry::LorentzVec> lorentz;
  std::vector<double> leaf_volumes;

  std::size_t size() const { return points.size(); }

  /// Mirrors Lorentz points into the ball.
  static EmbeddingSet from_lorentz(std::vector<geometry::LorentzVec> lorentz,
                                   std::vector<double> leaf_volumes);
  static EmbeddingSet from_poincare(std::vector<geometry::PoincareVec> points,
                                    std::vector<double> leaf_volumes);

  /// Throws std::invalid_argument on size mismatch, non-positive volumes or
  /// representations that disagree by more than 1e-6.
  void validate() const;
};

struct CseConfig {
  double t1 = 1000.0;
  double r1 = 2.0;
  double t2 = 1.0;
  double r2 = 0.0;
  double eta1 = 1.0;
  double eta2 = 1.0;
  /// Throws std::invalid_argument unless t1, t2 > 0 and eta1, eta2 >= 0.
  void validate() const;
};

/// Symmetric n x n matrix of geodesic-origin distances; the diagonal holds
/// the single-point value.
Matrix origin_distance_matrix(std::span<const geometry::PoincareVec> points);

/// Softmax weights (s_ij, s_ik, s_jk) / t1 with s = r1 - d; first entry is
/// the relaxed indicator that k lies below the LCA of i and j.
std::array<double, 3> triple_softmax(double d_ij, double d_ik, double d_jk, double t1, double r1);

double soft_lca_volume(int i, int j, const EmbeddingSet& z, const CseConfig& cfg);
/// Same quantity from precomputed pairwise distances.
double soft_lca_volume(int i, int j, const Matrix& distances, std::span<const double> volumes,
                       const CseConfig& cfg);

/// sum_edges w_ij log2(max(1, V_i + V_j + soft_lca_volume(i, j))). Warns and
/// returns 0 for an edgeless graph.
double cse_loss(const graph::WeightedGraph& g, const EmbeddingSet& z, const CseConfig& cfg);
double cse_loss(const graph::WeightedGraph& g, const Matrix& distances,
                std::span<const double> volumes, const CseConfig& cfg);

/// True iff leaf k lies below the LCA of leaves i and j, decided from the
/// three LCA depths.
bool descendant_indicator_discrete(const tree::PartitionTree& t, int i, int j, int k);
bool descendant_indicator_discrete(const tree::PartitionTree& t, const tree::LcaIndex& lca, int i,
                                   int j, int k);

/// Origin distance of the Lorentz-normalized sum of the points. Throws
/// NumericError if the sum has zero Lorentz norm.
double centroid_loss(std::span<const geometry::LorentzVec> points);
inline double centroid_loss(const EmbeddingSet& z) { return centroid_loss(z.lorentz); }

struct LossParts {
  double cse = 0.0;
  double con = 0.0;
  double cen = 0.0;
};

double total_loss(const LossParts& parts, const CseConfig& cfg);

// Taped counterparts ---------------------------------------------------------

/// u = x_s / (1 + x_0).
ad::VarVec to_poincare(std::span<const ad::Var> lorentz);

/// Geodesic-origin distance recorded as one node over both coordinate
/// vectors.
ad::Var geodesic_origin(std::span<const ad::Var> x, std::span<const ad::Var> y);

ad::Var cse_loss(const graph::WeightedGraph& g, std::span<const ad::VarVec> poincare,
                 std::span<const double> volumes, const CseConfig& cfg);

ad::Var centroid_loss(std::span<const ad::VarVec> lorentz);

}  // namespace hypcse::cse
