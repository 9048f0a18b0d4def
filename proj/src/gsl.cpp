#include "hypcse/gsl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>

#include "hypcse/diag.hpp"
#include "hypcse/geometry.hpp"

namespace hypcse::gsl {

double affinity(std::span<const double> a, std::span<const double> b, Affinity kind, double sigma) {
  if (kind == Affinity::Cosine) {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    const double denom = std::sqrt(aa * bb);
    return denom > 0.0 ? ab / denom : 0.0;
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-sq / (2.0 * sigma * sigma));
}

ad::Var affinity(std::span<const ad::Var> a, std::span<const ad::Var> b, Affinity kind, double sigma) {
  if (kind == Affinity::Cosine) {
    // Learner outputs are row-normalized, so the dot product is the cosine.
    return ad::dot(a, b);
  }
  ad::VarVec diff;
  diff.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff.push_back(a[i] - b[i]);
  return ad::exp(ad::dot(diff, diff) * (-1.0 / (2.0 * sigma * sigma)));
}

std::vector<graph::Edge> build_learner_graph(const Matrix& embeddings, int p, Affinity kind,
                                             double sigma) {
  const int n = static_cast<int>(embeddings.rows());
  if (n < 2) throw std::invalid_argument("learner graph needs at least two vertices");
  if (p < 1) throw std::invalid_argument("learner graph needs p >= 1");
  Matrix aff(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double a = affinity(embeddings.row(i), embeddings.row(j), kind, sigma);
      aff(i, j) = a;
      aff(j, i) = a;
    }
  }
  const int keep = std::min(p, n - 1);
  std::set<std::pair<int, int>> chosen;
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](int a, int b) {
      if (aff(i, a) != aff(i, b)) return aff(i, a) > aff(i, b);
      return a < b;
    });
    for (int t = 0; t < keep; ++t) chosen.insert({std::min(i, order[t]), std::max(i, order[t])});
  }
  std::vector<graph::Edge> edges;
  edges.reserve(chosen.size());
  for (const auto& [u, v] : chosen) edges.push_back({u, v, std::max(aff(u, v), kMinAffinity)});
  return edges;
}

void AnchorState::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
  if (top_p < 1) throw std::invalid_argument("top_p must be >= 1");
}

std::vector<graph::Edge> update_anchor(const AnchorState& state, Rng& rng) {
  state.validate();
  std::vector<graph::Edge> out;
  std::set<std::pair<int, int>> kept;
  for (const auto& e : state.anchor_edges) {
    if (rng.bernoulli(state.tau)) {
      out.push_back(e);
      kept.insert({e.u, e.v});
    }
  }
  // A learner edge that duplicates a kept anchor edge leaves the anchor weight.
  for (const auto& e : state.learner_edges) {
    if (rng.bernoulli(1.0 - state.tau) && !kept.contains({e.u, e.v})) out.push_back(e);
  }
  if (out.empty()) {
    diag::warn("anchor update produced an empty graph; keeping the previous anchor edges");
    return state.anchor_edges;
  }
  std::sort(out.begin(), out.end(), [](const graph::Edge& a, const graph::Edge& b) {
    return std::pair(a.u, a.v) < std::pair(b.u, b.v);
  });
  return out;
}

void AugmentConfig::validate() const {
  if (!(edge_drop_rate >= 0.0 && edge_drop_rate <= 1.0)) {
    throw std::invalid_argument("edge_drop_rate must lie in [0, 1]");
  }
  if (!(feature_mask_rate >= 0.0 && feature_mask_rate < 1.0)) {
    throw std::invalid_argument("feature_mask_rate must lie in [0, 1)");
  }
}

graph::WeightedGraph augment(const graph::WeightedGraph& g, const AugmentConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<graph::Edge> kept;
  kept.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    if (!rng.bernoulli(cfg.edge_drop_rate)) kept.push_back(e);
  }
  Matrix features = g.features();
  if (cfg.feature_mask_rate > 0.0) {
    for (double& x : features.data()) {
      if (rng.bernoulli(cfg.feature_mask_rate)) x = 0.0;
    }
  }
  return graph::WeightedGraph(g.num_vertices(), std::move(kept), std::move(features));
}

namespace {

double stable_distance(std::span<const double> x, std::span<const double> y) {
  return std::acosh(std::max(1.0, -geometry::lorentz_inner(x, y)));
}

double neg_log_softmax(const std::vector<double>& logits, std::size_t index) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return -(logits[index] - mx - std::log(z));
}

}  // namespace

double contrastive_loss(const Matrix& anchor_view, const Matrix& learner_view, double t2, double r2) {
  const std::size_t n = anchor_view.rows();
  if (learner_view.rows() != n || learner_view.cols() != anchor_view.cols()) {
    throw std::invalid_argument("contrastive_loss: views differ in shape");
  }
  if (n == 0) throw std::invalid_argument("contrastive_loss: empty views");
  double total = 0.0;
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      logits[k] = (r2 - stable_distance(learner_view.row(i), anchor_view.row(k))) / t2;
    }
    total += neg_log_softmax(logits, i);
    for (std::size_t k = 0; k < n; ++k) {
      logits[k] = (r2 - stable_distance(anchor_view.row(i), learner_view.row(k))) / t2;
    }
    total += neg_log_softmax(logits, i);
  }
  return total / (2.0 * static_cast<double>(n));
}

ad::Var contrastive_loss(std::span<const ad::VarVec> anchor_view,
                         std::span<const ad::VarVec> learner_view, double t2, double r2) {
  const std::size_t n = anchor_view.size();
  if (learner_view.size() != n) throw std::invalid_argument("contrastive_loss: views differ in size");
  if (n == 0) throw std::invalid_argument("contrastive_loss: empty views");
  // score[i * n + k] = (r2 - d_L(P_l^i, P_a^k)) / t2; the reverse direction
  // reads the transpose since the distance is symmetric.
  std::vector<ad::Var> score(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      score[i * n + k] = (r2 - ad::lorentz_distance(learner_view[i], anchor_view[k])) / t2;
    }
  }
  ad::VarVec terms;
  terms.reserve(2 * n);
  ad::VarVec logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) logits[k] = score[i * n + k];
    terms.push_back(ad::log_softmax_at(logits, i));
    for (std::size_t k = 0; k < n; ++k) logits[k] = score[k * n + i];
    terms.push_back(ad::log_softmax_at(logits, i));
  }
  return ad::sum(terms) * (-1.0 / (2.0 * static_cast<double>(n)));
}

}  // namespace hypcse::gsl
