#include "hypcse/cse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hypcse/diag.hpp"
#include "hypcse/dual.hpp"
#include "hypcse/errors.hpp"

namespace hypcse::cse {

using geometry::LorentzVec;
using geometry::PoincareVec;

EmbeddingSet EmbeddingSet::from_lorentz(std::vector<LorentzVec> lorentz,
                                        std::vector<double> leaf_volumes) {
  EmbeddingSet z;
  z.points.reserve(lorentz.size());
  for (const auto& x : lorentz) z.points.push_back(geometry::lorentz_to_poincare(x));
  z.lorentz = std::move(lorentz);
  z.leaf_volumes = std::move(leaf_volumes);
  z.validate();
  return z;
}

EmbeddingSet EmbeddingSet::from_poincare(std::vector<PoincareVec> points,
                                         std::vector<double> leaf_volumes) {
  EmbeddingSet z;
  z.lorentz.reserve(points.size());
  for (const auto& u : points) z.lorentz.push_back(geometry::poincare_to_lorentz(u));
  z.points = std::move(points);
  z.leaf_volumes = std::move(leaf_volumes);
  z.validate();
  return z;
}

void EmbeddingSet::validate() const {
  if (points.size() != lorentz.size() || points.size() != leaf_volumes.size()) {
    throw std::invalid_argument("embedding set: points, lorentz and volumes differ in size");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(leaf_volumes[i] > 0.0)) throw std::invalid_argument("embedding set: volume must be positive");
    const PoincareVec mirrored = geometry::lorentz_to_poincare(lorentz[i]);
    if (mirrored.dim() != points[i].dim()) {
      throw std::invalid_argument("embedding set: dimension mismatch");
    }
    for (std::size_t c = 0; c < mirrored.dim(); ++c) {
      if (std::abs(mirrored.coords[c] - points[i].coords[c]) > 1e-6) {
        throw std::invalid_argument("embedding set: Poincare and Lorentz points disagree at row " +
                                    std::to_string(i));
      }
    }
  }
}

void CseConfig::validate() const {
  if (!(t1 > 0.0) || !(t2 > 0.0)) throw std::invalid_argument("temperatures t1, t2 must be > 0");
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) throw std::invalid_argument("eta1, eta2 must be >= 0");
  if (!std::isfinite(r1) || !std::isfinite(r2)) throw std::invalid_argument("r1, r2 must be finite");
}

Matrix origin_distance_matrix(std::span<const PoincareVec> points) {
  const std::size_t n = points.size();
  Matrix d(n, n);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : points[i].coords) s += v * v;
    if (s >= 1.0) throw std::invalid_argument("point outside the Poincare ball");
    sq[i] = s;
    d(i, i) = geometry::point_origin_value(s);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double e = 0.0;
      for (std::size_t t = 0; t < points[i].coords.size(); ++t) {
        const double delta = points[i].coords[t] - points[j].coords[t];
        e += delta * delta;
      }
      const double v = geometry::geodesic_origin_gram(sq[i], sq[j], e);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

std::array<double, 3> triple_softmax(double d_ij, double d_ik, double d_jk, double t1, double r1) {
  const std::array<double, 3> l = {(r1 - d_ij) / t1, (r1 - d_ik) / t1, (r1 - d_jk) / t1};
  const double mx = std::max({l[0], l[1], l[2]});
  std::array<double, 3> p{};
  double z = 0.0;
  for (int t = 0; t < 3; ++t) {
    p[t] = std::exp(l[t] - mx);
    z += p[t];
  }
  for (double& v : p) v /= z;
  return p;
}

double soft_lca_volume(int i, int j, const Matrix& distances, std::span<const double> volumes,
                       const CseConfig& cfg) {
  if (i == j) throw std::invalid_argument("soft_lca_volume needs distinct vertices");
  const int n = static_cast<int>(volumes.size());
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    if (k == i || k == j) continue;
    const auto p = triple_softmax(distances(i, j), distances(i, k), distances(j, k), cfg.t1, cfg.r1);
    total += volumes[k] * p[0];
  }
  return total;
}

double soft_lca_volume(int i, int j, const EmbeddingSet& z, const CseConfig& cfg) {
  return soft_lca_volume(i, j, origin_distance_matrix(z.points), z.leaf_volumes, cfg);
}

double cse_loss(const graph::WeightedGraph& g, const Matrix& distances,
                std::span<const double> volumes, const CseConfig& cfg) {
  if (static_cast<int>(volumes.size()) != g.num_vertices()) {
    throw std::invalid_argument("cse_loss: graph and embeddings cover different vertex sets");
  }
  if (g.num_edges() == 0) {
    diag::warn("cse_loss on an edgeless graph is 0");
    return 0.0;
  }
  double loss = 0.0;
  for (const auto& e : g.edges()) {
    const double vol = volumes[e.u] + volumes[e.v] + soft_lca_volume(e.u, e.v, distances, volumes, cfg);
    loss += e.weight * std::log2(std::max(vol, 1.0));
  }
  return loss;
}

double cse_loss(const graph::WeightedGraph& g, const EmbeddingSet& z, const CseConfig& cfg) {
  return cse_loss(g, origin_distance_matrix(z.points), z.leaf_volumes, cfg);
}

bool descendant_indicator_discrete(const tree::PartitionTree& t, const tree::LcaIndex& lca, int i,
                                   int j, int k) {
  if (i == j || i == k || j == k) throw std::invalid_argument("descendant indicator needs distinct leaves");
  const int dij = t.depth(lca.lca_vertices(i, j));
  return dij <= t.depth(lca.lca_vertices(i, k)) && dij <= t.depth(lca.lca_vertices(j, k));
}

bool descendant_indicator_discrete(const tree::PartitionTree& t, int i, int j, int k) {
  return descendant_indicator_discrete(t, tree::LcaIndex(t), i, j, k);
}

double centroid_loss(std::span<const LorentzVec> points) {
  if (points.empty()) throw std::invalid_argument("centroid_loss needs at least one point");
  std::vector<double> s(points.front().coords.size(), 0.0);
  for (const auto& p : points) {
    if (p.coords.size() != s.size()) throw std::invalid_argument("centroid_loss: dimension mismatch");
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += p.coords[c];
  }
  const double modulus = std::sqrt(std::abs(geometry::lorentz_inner(s, s)));
  if (!(modulus > 0.0)) throw NumericError("centroid_loss: point sum has zero Lorentz norm");
  return std::acosh(std::max(1.0, s[0] / modulus));
}

double total_loss(const LossParts& parts, const CseConfig& cfg) {
  return parts.cse + cfg.eta1 * parts.con + cfg.eta2 * parts.cen;
}

ad::VarVec to_poincare(std::span<const ad::Var> lorentz) {
  const ad::Var denom = 1.0 + lorentz[0];
  ad::VarVec u;
  u.reserve(lorentz.size() - 1);
  for (std::size_t c = 1; c < lorentz.size(); ++c) u.push_back(lorentz[c] / denom);
  return u;
}

ad::Var geodesic_origin(std::span<const ad::Var> x, std::span<const ad::Var> y) {
  assert(x.size() == y.size() && !x.empty());
  using D3 = ad::Dual<3>;
  double a = 0.0;
  double b = 0.0;
  double e = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double xv = x[t].value();
    const double yv = y[t].value();
    a += xv * xv;
    b += yv * yv;
    e += (xv - yv) * (xv - yv);
  }
  const D3 r = geometry::geodesic_origin_gram(D3::seed(a, 0), D3::seed(b, 1), D3::seed(e, 2));
  std::vector<int> parents;
  std::vector<double> partials;
  parents.reserve(2 * x.size());
  partials.reserve(2 * x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double xv = x[t].value();
    const double yv = y[t].value();
    parents.push_back(x[t].index());
    partials.push_back(2.0 * r.d[0] * xv + 2.0 * r.d[2] * (xv - yv));
    parents.push_back(y[t].index());
    partials.push_back(2.0 * r.d[1] * yv - 2.0 * r.d[2] * (xv - yv));
  }
  return x[0].tape()->record(r.v, parents, partials);
}

ad::Var cse_loss(const graph::WeightedGraph& g, std::span<const ad::VarVec> poincare,
                 std::span<const double> volumes, const CseConfig& cfg) {
  const int n = g.num_vertices();
  if (static_cast<int>(poincare.size()) != n || static_cast<int>(volumes.size()) != n) {
    throw std::invalid_argument("cse_loss: graph and embeddings cover different vertex sets");
  }
  if (n == 0) throw std::invalid_argument("cse_loss: empty graph");
  ad::Tape& tape = *poincare[0][0].tape();
  if (g.num_edges() == 0) {
    diag::warn("cse_loss on an edgeless graph is 0");
    return tape.variable(0.0);
  }

  // Pairwise distances for every vertex that touches an edge; all pairs are
  // needed because each edge sums over every third vertex.
  std::vector<ad::Var> dist(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const ad::Var d = geodesic_origin(poincare[i], poincare[j]);
      dist[static_cast<std::size_t>(i) * n + j] = d;
      dist[static_cast<std::size_t>(j) * n + i] = d;
    }
  }
  auto at = [&](int i, int j) { return dist[static_cast<std::size_t>(i) * n + j]; };

  std::vector<int> parents;
  std::vector<double> partials;
  ad::VarVec terms;
  terms.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    const int i = e.u;
    const int j = e.v;
    const ad::Var dij = at(i, j);
    parents.assign(1, dij.index());
    partials.assign(1, 0.0);
    double soft = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i || k == j) continue;
      const ad::Var dik = at(i, k);
      const ad::Var djk = at(j, k);
      const auto p = triple_softmax(dij.value(), dik.value(), djk.value(), cfg.t1, cfg.r1);
      const double vk = volumes[k];
      soft += vk * p[0];
      // d p0 / d l = (p0 (1 - p0), -p0 p1, -p0 p2) and d l / d d = -1 / t1.
      partials[0] -= vk * p[0] * (1.0 - p[0]) / cfg.t1;
      parents.push_back(dik.index());
      partials.push_back(vk * p[0] * p[1] / cfg.t1);
      parents.push_back(djk.index());
      partials.push_back(vk * p[0] * p[2] / cfg.t1);
    }
    const ad::Var soft_var = tape.record(soft, parents, partials);
    const ad::Var vol = ad::clamp_min(soft_var + (volumes[i] + volumes[j]), 1.0);
    terms.push_back(ad::log2(vol) * e.weight);
  }
  return ad::sum(terms);
}

ad::Var centroid_loss(std::span<const ad::VarVec> lorentz) {
  if (lorentz.empty()) throw std::invalid_argument("centroid_loss needs at least one point");
  const std::size_t dim = lorentz.front().size();
  ad::VarVec s;
  s.reserve(dim);
  ad::VarVec column(lorentz.size());
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t i = 0; i < lorentz.size(); ++i) column[i] = lorentz[i][c];
    s.push_back(ad::sum(column));
  }
  const ad::Var inner = ad::lorentz_inner(s, s);
  if (!(std::abs(inner.value()) > 0.0)) {
    throw NumericError("centroid_loss: point sum has zero Lorentz norm");
  }
  const ad::Var modulus = ad::sqrt(ad::abs(inner));
  return ad::acosh(s[0] / modulus);
}

}  // namespace hypcse::cse
