#include "hypcse/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hypcse::graph {

WeightedGraph::WeightedGraph(int n, std::vector<Edge> edges, Matrix features)
    : n_(n), edges_(std::move(edges)), features_(std::move(features)) {
  if (n < 0) throw std::invalid_argument("negative vertex count");
  if (!features_.empty() && features_.rows() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("feature rows do not match vertex count");
  }
  for (Edge& e : edges_) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("self-loop at vertex " + std::to_string(e.u));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("edge weight must be positive and finite");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (edges_[i].u == edges_[i - 1].u && edges_[i].v == edges_[i - 1].v) {
      throw std::invalid_argument("duplicate edge (" + std::to_string(edges_[i].u) + ", " +
                                  std::to_string(edges_[i].v) + ")");
    }
  }

  degrees_.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(n), 0);
  for (const Edge& e : edges_) {
    degrees_[e.u] += e.weight;
    degrees_[e.v] += e.weight;
    ++counts[e.u];
    ++counts[e.v];
  }
  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + counts[v];
  adjacency_.resize(offsets_.back());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.u]++] = {e.v, e.weight};
    adjacency_[fill[e.v]++] = {e.u, e.weight};
  }
  total_volume_ = std::accumulate(degrees_.begin(), degrees_.end(), 0.0);
}

bool WeightedGraph::is_connected() const {
  if (n_ <= 1) return true;
  std::vector<bool> seen(static_cast<std::size_t>(n_), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const Neighbor& nb : neighbors(v)) {
      if (!seen[nb.vertex]) {
        seen[nb.vertex] = true;
        ++count;
        stack.push_back(nb.vertex);
      }
    }
  }
  return count == n_;
}

WeightedGraph WeightedGraph::with_features(Matrix features) const {
  return WeightedGraph(n_, edges_, std::move(features));
}

WeightedGraph WeightedGraph::induced(std::span<const int> vertices) const {
  std::vector<int> local(static_cast<std::size_t>(n_), -1);
  for (std::size_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = static_cast<int>(i);
  std::vector<Edge> sub;
  for (const Edge& e : edges_) {
    if (local[e.u] >= 0 && local[e.v] >= 0) sub.push_back({local[e.u], local[e.v], e.weight});
  }
  Matrix feats;
  if (!features_.empty()) {
    feats = Matrix(vertices.size(), features_.cols());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      std::ranges::copy(features_.row(vertices[i]), feats.row(i).begin());
    }
  }
  return WeightedGraph(static_cast<int>(vertices.size()), std::move(sub), std::move(feats));
}

VertexSubset::VertexSubset(int n, std::span<const int> members) : VertexSubset(n) {
  for (int v : members) insert(v);
}

VertexSubset VertexSubset::from_bits(int n, std::uint64_t bits) {
  VertexSubset s(n);
  for (int v = 0; v < n; ++v) {
    if ((bits >> v) & 1U) s.insert(v);
  }
  return s;
}

Matrix standardize_columns(const Matrix& x) {
  Matrix out = x;
  const std::size_t n = x.rows();
  if (n == 0) return out;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t r = 0; r < n; ++r) out(r, c) = sd > 1e-12 ? (x(r, c) - mean) / sd : 0.0;
  }
  return out;
}

WeightedGraph build_knn_graph(const Matrix& x, const KnnOptions& options) {
  const int n = static_cast<int>(x.rows());
  if (n < 2) throw std::invalid_argument("build_knn_graph needs at least 2 points");
  if (options.k < 1) throw std::invalid_argument("k must be positive");
  if (!(options.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const Matrix z = options.standardize ? standardize_columns(x) : x;
  const double inv_two_sigma_sq = 1.0 / (2.0 * options.sigma * options.sigma);
  const int k = std::min(options.k, n - 1);

  std::vector<Edge> candidates;
  candidates.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  std::vector<std::pair<double, int>> row(static_cast<std::size_t>(n) - 1);
  for (int i = 0; i < n; ++i) {
    std::size_t m = 0;
    const auto xi = z.row(i);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto xj = z.row(j);
      double sq = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) sq += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      row[m++] = {std::exp(-sq * inv_two_sigma_sq), j};
    }
    std::partial_sort(row.begin(), row.begin() + k, row.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (int t = 0; t < k; ++t) {
      const int j = row[t].second;
      // Gaussian weights underflow to 0 for far points; keep them strictly positive.
      const double w = std::max(row[t].first, 1e-300);
      candidates.push_back({std::min(i, j), std::max(i, j), w});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
                   candidates.end());
  return WeightedGraph(n, std::move(candidates), x);
}

double volume(const WeightedGraph& g, const VertexSubset& s) {
  double total = 0.0;
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (s.contains(v)) total += g.degree(v);
  }
  return total;
}

double cut(const WeightedGraph& g, const VertexSubset& s) {
  double total = 0.0;
  for (const Edge& e : g.edges()) {
    if (s.contains(e.u) != s.contains(e.v)) total += e.weight;
  }
  return total;
}

ConductanceResult conductance(const WeightedGraph& g) {
  const int n = g.num_vertices();
  if (n > 20) throw std::invalid_argument("conductance: exhaustive oracle limited to n <= 20");
  if (n < 2) return {0.0, true};
  if (!g.is_connected()) return {0.0, true};
  const double total = g.total_volume();
  double best = std::numeric_limits<double>::infinity();
  // S and its complement give the same ratio; fixing vertex n-1 outside S halves the work.
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << (n - 1)); ++bits) {
    double vol = 0.0;
    for (int v = 0; v < n; ++v) {
      if ((bits >> v) & 1U) vol += g.degree(v);
    }
    double c = 0.0;
    for (const Edge& e : g.edges()) {
      if (((bits >> e.u) & 1U) != ((bits >> e.v) & 1U)) c += e.weight;
    }
    const double denom = std::min(vol, total - vol);
    if (denom > 0.0) best = std::min(best, c / denom);
  }
  return {best, false};
}

std::vector<Subgraph> subgraph_sample(const WeightedGraph& g, int n_prime, int n_seed,
                                      std::uint64_t rng_seed) {
  const int n = g.num_vertices();
  std::vector<Subgraph> out;
  if (n_prime >= n) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    out.push_back({all, g});
    return out;
  }
  if (n_seed < 1 || n_seed > n_prime || n_prime < 1) {
    throw std::invalid_argument("subgraph_sample requires 1 <= n_seed <= n_prime");
  }
  Rng rng(rng_seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::size_t cursor = 0;
  auto next_unused = [&]() -> int {
    while (cursor < order.size() && used[order[cursor]]) ++cursor;
    return cursor < order.size() ? order[cursor] : -1;
  };

  const int full_count = n / n_prime;
  for (int s = 0; s < full_count; ++s) {
    std::vector<int> members;
    std::deque<int> frontier;
    auto take = [&](int v) {
      used[v] = true;
      members.push_back(v);
      frontier.push_back(v);
    };
    for (int t = 0; t < n_seed; ++t) {
      const int v = next_unused();
      if (v < 0) break;
      take(v);
    }
    while (static_cast<int>(members.size()) < n_prime) {
      if (frontier.empty()) {
        const int v = next_unused();
        if (v < 0) break;
        take(v);
        continue;
      }
      const int v = frontier.front();
      frontier.pop_front();
      std::vector<Neighbor> nbs(g.neighbors(v).begin(), g.neighbors(v).end());
      std::sort(nbs.begin(), nbs.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.vertex < b.vertex;
      });
      for (const Neighbor& nb : nbs) {
        if (static_cast<int>(members.size()) >= n_prime) break;
        if (!used[nb.vertex]) take(nb.vertex);
      }
    }
    std::sort(members.begin(), members.end());
    WeightedGraph sub = g.induced(members);
    out.push_back({std::move(members), std::move(sub)});
  }
  std::vector<int> rest;
  for (int v = 0; v < n; ++v) {
    if (!used[v]) rest.push_back(v);
  }
  if (!rest.empty()) {
    WeightedGraph sub = g.induced(rest);
    out.push_back({std::move(rest), std::move(sub)});
  }
  return out;
}

}  // namespace hypcse::graph
