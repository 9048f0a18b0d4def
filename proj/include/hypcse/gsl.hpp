#pragma once

// Graph structure learning: the learner graph, the bootstrapped anchor
// update, view augmentation and the hyperbolic contrastive loss.

#include <cstdint>
#include <span>
#include <vector>

#include "hypcse/autodiff.hpp"
#include "hypcse/graph.hpp"
#include "hypcse/matrix.hpp"
#include "hypcse/random.hpp"

namespace hypcse::gsl {

enum class Affinity { Cosine, Gaussian };

/// Learner-edge weights are affinities floored here so they stay positive.
inline constexpr double kMinAffinity = 1e-6;

double affinity(std::span<const double> a, std::span<const double> b, Affinity kind, double sigma);
ad::Var affinity(std::span<const ad::Var> a, std::span<const ad::Var> b, Affinity kind, double sigma);

/// Per-vertex top-p by affinity (lower index wins ties), symmetrized by
/// union; weights are max(affinity, kMinAffinity). Sorted like WeightedGraph.
std::vector<graph::Edge> build_learner_graph(const Matrix& embeddings, int p, Affinity kind,
                                             double sigma = 1.0);

struct AnchorState {
  std::vector<graph::Edge> anchor_edges;
  std::vector<graph::Edge> learner_edges;
  double tau = 0.9999;
  int top_p = 10;
  void validate() const;
};

/// Keeps each anchor edge with probability tau and adopts each learner edge
/// with probability 1 - tau; an edge drawn from both sets keeps its anchor
/// weight. Returns the previous anchor edges (with a warning) if the result
/// would be empty.
std::vector<graph::Edge> update_anchor(const AnchorState& state, Rng& rng);

struct AugmentConfig {
  double edge_drop_rate = 0.2;
  double feature_mask_rate = 0.2;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Independent edge dropout and feature-entry masking.
graph::WeightedGraph augment(const graph::WeightedGraph& g, const AugmentConfig& cfg);

/// (1 / 2n) sum_i [l(P_l^i, P_a) + l(P_a^i, P_l)] with
/// l(x, Y) = -log softmax_k((r2 - d_L(x, Y_k)) / t2) at the matching index.
/// Throws std::invalid_argument on a count mismatch.
double contrastive_loss(const Matrix& anchor_view, const Matrix& learner_view, double t2, double r2);
ad::Var contrastive_loss(std::span<const ad::VarVec> anchor_view,
                         std::span<const ad::VarVec> learner_view, double t2, double r2);

}  // namespace hypcse::gsl
