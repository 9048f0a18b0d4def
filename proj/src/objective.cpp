#include "hypcse/objective.hpp"

#include <algorithm>
#include <unordered_map>

#include "hypcse/cse.hpp"

namespace hypcse::objective {

Model build_model(const ModelConfig& cfg, std::size_t in_features, Rng& rng) {
  Model m;
  m.encoder = model::Encoder::create(m.store, in_features, cfg.hidden, cfg.embed, rng, cfg.max_norm);
  m.projector = model::Projector::create(m.store, cfg.embed, cfg.hidden, rng, cfg.max_norm);
  const std::size_t split = m.store.size();
  m.learner = model::GraphLearner::create(m.store, cfg.learner, in_features, cfg.hidden, rng);
  m.affinity = cfg.learner == model::LearnerKind::Gcn ? gsl::Affinity::Cosine : gsl::Affinity::Gaussian;
  for (std::size_t i = 0; i < m.store.size(); ++i) {
    (i < split ? m.hyperbolic_params : m.learner_params).push_back(i);
  }
  return m;
}

namespace {

// Attention logits for the learner view: log affinity per edge, 0 for the
// self-loop.
model::AttentionGraph learner_attention(const graph::WeightedGraph& view, const model::Points& emb,
                                        gsl::Affinity kind, ad::Tape& tape) {
  model::AttentionGraph att = model::AttentionGraph::from_graph(view);
  const ad::Var zero = tape.variable(0.0);
  auto key = [](int u, int v) {
    return (static_cast<std::uint64_t>(std::min(u, v)) << 32) |
           static_cast<std::uint32_t>(std::max(u, v));
  };
  std::unordered_map<std::uint64_t, ad::Var> logit;
  logit.reserve(view.num_edges());
  for (const auto& e : view.edges()) {
    const ad::Var a = gsl::affinity(emb[e.u], emb[e.v], kind, 1.0);
    logit.emplace(key(e.u, e.v), ad::log(ad::clamp_min(a, gsl::kMinAffinity)));
  }
  att.log_weights.resize(att.neighbors.size());
  for (std::size_t i = 0; i < att.neighbors.size(); ++i) {
    const int self = static_cast<int>(i);
    for (int j : att.neighbors[i]) {
      att.log_weights[i].push_back(j == self ? zero : logit.at(key(self, j)));
    }
  }
  return att;
}

}  // namespace

model::Points anchor_view_embeddings(const Model& m, const model::Bound& bound,
                                     const graph::WeightedGraph& g) {
  return m.encoder.forward(bound, g.features(), model::AttentionGraph::from_graph(g));
}

Objective record_objective(const Model& m, const model::Bound& bound,
                           const graph::WeightedGraph& anchor, const LossConfig& cfg,
                           const std::optional<ViewSeeds>& seeds) {
  ad::Tape& tape = bound.tape();
  const int n = anchor.num_vertices();
  Objective obj;

  const model::Points learner_emb = m.learner.forward(bound, anchor.features(), anchor);
  obj.learner_edges = gsl::build_learner_graph(model::values_of(learner_emb), cfg.p, m.affinity);
  const graph::WeightedGraph learner_graph(n, obj.learner_edges, anchor.features());

  graph::WeightedGraph view_a = anchor;
  graph::WeightedGraph view_l = learner_graph;
  if (seeds) {
    gsl::AugmentConfig aug;
    aug.edge_drop_rate = cfg.edge_drop;
    aug.feature_mask_rate = cfg.feature_mask;
    aug.seed = seeds->anchor;
    view_a = gsl::augment(anchor, aug);
    aug.seed = seeds->learner;
    view_l = gsl::augment(learner_graph, aug);
  }

  obj.anchor_embeddings = anchor_view_embeddings(m, bound, view_a);
  const model::Points z_l = m.encoder.forward(
      bound, view_l.features(), learner_attention(view_l, learner_emb, m.affinity, tape));
  const model::Points p_a = m.projector.forward(bound, obj.anchor_embeddings);
  const model::Points p_l = m.projector.forward(bound, z_l);

  std::vector<ad::VarVec> poincare;
  poincare.reserve(obj.anchor_embeddings.size());
  for (const auto& z : obj.anchor_embeddings) poincare.push_back(cse::to_poincare(z));
  if (cfg.cse_radius > 0.0) {
    for (ad::VarVec& u : poincare) {
      const ad::Var scale = cfg.cse_radius / ad::sqrt(ad::clamp_min(ad::dot(u, u), 1e-300));
      for (ad::Var& c : u) c = c * scale;
    }
  }
  cse::CseConfig cc;
  cc.t1 = cfg.t1;
  cc.r1 = cfg.r1;
  obj.cse = cse::cse_loss(anchor, poincare, anchor.degrees(), cc);
  obj.con = gsl::contrastive_loss(p_a, p_l, cfg.t2, cfg.r2);
  obj.cen = cse::centroid_loss(obj.anchor_embeddings);
  obj.total = obj.cse + obj.con * cfg.eta1 + obj.cen * cfg.eta2;
  return obj;
}

}  // namespace hypcse::objective
