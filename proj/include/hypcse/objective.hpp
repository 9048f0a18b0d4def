#pragma once

// The trainable model and the combined objective recorded on a tape. Shared
// by the training loop and the gradient checks.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hypcse/autodiff.hpp"
#include "hypcse/graph.hpp"
#include "hypcse/gsl.hpp"
#include "hypcse/model.hpp"
#include "hypcse/random.hpp"

namespace hypcse::objective {

struct ModelConfig {
  std::size_t hidden = 16;
  std::size_t embed = 16;
  model::LearnerKind learner = model::LearnerKind::Gcn;
  /// Spatial-norm cap of every Lorentz linear map; 0 disables it.
  double max_norm = 0.0;
};

/// Encoder and projector parameters come first in the store, learner
/// parameters after them.
struct Model {
  model::ParamStore store;
  model::Encoder encoder;
  model::Projector projector;
  model::GraphLearner learner;
  /// Cosine for the GCN learner, Gaussian for the MLP learner.
  gsl::Affinity affinity = gsl::Affinity::Cosine;
  std::vector<std::size_t> hyperbolic_params;
  std::vector<std::size_t> learner_params;
};

Model build_model(const ModelConfig& cfg, std::size_t in_features, Rng& rng);

struct LossConfig {
  int p = 10;
  double t1 = 0.1;
  double r1 = 2.0;
  /// Radius the anchor embeddings are rescaled to before the structural
  /// term; 0 uses them as encoded.
  double cse_radius = 0.999;
  double t2 = 1.0;
  double r2 = 0.0;
  double eta1 = 1.0;
  double eta2 = 1.0;
  double edge_drop = 0.2;
  double feature_mask = 0.2;
};

struct ViewSeeds {
  std::uint64_t anchor = 0;
  std::uint64_t learner = 0;
};

struct Objective {
  ad::Var cse;
  ad::Var con;
  ad::Var cen;
  ad::Var total;
  /// Encoder output on the anchor view.
  model::Points anchor_embeddings;
  /// Learner graph built this step, in the anchor graph's vertex ids.
  std::vector<graph::Edge> learner_edges;
};

/// Encoder output on `g` with plain attention (no learned logits).
model::Points anchor_view_embeddings(const Model& m, const model::Bound& bound,
                                     const graph::WeightedGraph& g);

/// Records cse + eta1 con + eta2 cen for the anchor graph `anchor` (features
/// attached). The learner graph is rebuilt from the current learner output.
/// With seeds both views are augmented; without, the clean views are used.
/// The structural term uses the un-augmented anchor edges and degrees.
Objective record_objective(const Model& m, const model::Bound& bound,
                           const graph::WeightedGraph& anchor, const LossConfig& cfg,
                           const std::optional<ViewSeeds>& seeds);

}  // namespace hypcse::objective
