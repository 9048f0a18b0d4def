#include "hypcse/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "hypcse/errors.hpp"

namespace hypcse::entropy {

using graph::Edge;
using graph::WeightedGraph;
using tree::LcaIndex;
using tree::PartitionTree;

namespace {

void check_match(const WeightedGraph& g, const PartitionTree& t) {
  if (t.num_leaves() != g.num_vertices()) {
    throw DataError("tree has " + std::to_string(t.num_leaves()) + " leaves but graph has " +
                    std::to_string(g.num_vertices()) + " vertices");
  }
}

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace

TreeStats tree_stats(const WeightedGraph& g, const PartitionTree& t) {
  check_match(g, t);
  const int size = t.size();
  TreeStats s;
  s.volume.assign(static_cast<std::size_t>(size), 0.0);
  std::vector<double> internal(static_cast<std::size_t>(size), 0.0);
  for (int v = 0; v < g.num_vertices(); ++v) s.volume[t.leaf_of(v)] = g.degree(v);
  const LcaIndex lca(t);
  for (const Edge& e : g.edges()) internal[lca.lca_vertices(e.u, e.v)] += e.weight;
  for (int v : t.postorder()) {
    const int p = t.node(v).parent;
    if (p >= 0) {
      s.volume[p] += s.volume[v];
      internal[p] += internal[v];
    }
  }
  s.cut.resize(static_cast<std::size_t>(size));
  for (int v = 0; v < size; ++v) s.cut[v] = std::max(0.0, s.volume[v] - 2.0 * internal[v]);
  s.cut[t.root()] = 0.0;
  return s;
}

double structural_entropy(const WeightedGraph& g, const PartitionTree& t) {
  const TreeStats s = tree_stats(g, t);
  const double total = g.total_volume();
  if (!(total > 0.0)) throw DataError("structural entropy needs a graph with positive volume");
  double h = 0.0;
  for (int v = 0; v < t.size(); ++v) {
    const int p = t.node(v).parent;
    if (p < 0 || s.cut[v] <= 0.0) continue;
    h -= s.cut[v] / total * std::log2(s.volume[v] / s.volume[p]);
  }
  return h;
}

double one_dim_entropy(const WeightedGraph& g) {
  const double total = g.total_volume();
  double h = 0.0;
  for (double d : g.degrees()) {
    if (d > 0.0) h -= d / total * std::log2(d / total);
  }
  return h;
}

double leaf_term(const WeightedGraph& g) {
  double s = 0.0;
  for (double d : g.degrees()) s += xlog2x(d);
  return s / g.total_volume();
}

double se_cost(const WeightedGraph& g, const PartitionTree& t) {
  const TreeStats s = tree_stats(g, t);
  const LcaIndex lca(t);
  double cost = 0.0;
  for (const Edge& e : g.edges()) cost += e.weight * std::log2(s.volume[lca.lca_vertices(e.u, e.v)]);
  return cost;
}

double structural_entropy_lca(const WeightedGraph& g, const PartitionTree& t) {
  const double total = g.total_volume();
  if (!(total > 0.0)) throw DataError("structural entropy needs a graph with positive volume");
  return 2.0 / total * se_cost(g, t) - leaf_term(g);
}

void enumerate_trees(int n, bool binary_only, const std::function<void(const PartitionTree&)>& visit) {
  if (n < 1) throw std::invalid_argument("enumerate_trees needs n >= 1");
  std::vector<int> parent{-1};
  std::vector<int> vertex{0};

  std::function<void(int)> insert = [&](int leaf) {
    if (leaf == n) {
      visit(PartitionTree(parent, vertex));
      return;
    }
    const int existing = static_cast<int>(parent.size());
    // Attach as an extra child of an internal node.
    if (!binary_only) {
      for (int x = 0; x < existing; ++x) {
        if (vertex[x] >= 0) continue;
        parent.push_back(x);
        vertex.push_back(leaf);
        insert(leaf + 1);
        parent.pop_back();
        vertex.pop_back();
      }
    }
    // Subdivide the edge above node y with a new internal node.
    for (int y = 0; y < existing; ++y) {
      const int old_parent = parent[y];
      const int mid = existing;
      parent.push_back(old_parent);
      vertex.push_back(-1);
      parent[y] = mid;
      parent.push_back(mid);
      vertex.push_back(leaf);
      insert(leaf + 1);
      parent.pop_back();
      vertex.pop_back();
      parent[y] = old_parent;
      parent.pop_back();
      vertex.pop_back();
    }
  };
  insert(1);
}

MinimumTree min_se_bruteforce(const WeightedGraph& g, bool binary_only) {
  const int n = g.num_vertices();
  const int limit = binary_only ? 9 : 7;
  if (n > limit) {
    throw std::invalid_argument("min_se_bruteforce: n = " + std::to_string(n) + " exceeds " +
                                std::to_string(limit));
  }
  MinimumTree best{PartitionTree::flat(n), std::numeric_limits<double>::infinity()};
  enumerate_trees(n, binary_only, [&](const PartitionTree& t) {
    const double h = structural_entropy(g, t);
    if (h < best.entropy) best = {t, h};
  });
  return best;
}

bool check_conductance_bound(const WeightedGraph& g, const PartitionTree& t) {
  const graph::ConductanceResult phi = graph::conductance(g);
  const double rho = structural_entropy(g, t) / one_dim_entropy(g);
  return rho >= phi.value - 1e-9;
}

double dendrogram_purity(const PartitionTree& t, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != t.num_leaves()) {
    throw std::invalid_argument("label count does not match leaf count");
  }
  std::map<int, int> remap;
  for (int l : labels) remap.emplace(l, static_cast<int>(remap.size()));
  const std::size_t classes = remap.size();
  std::vector<int> dense(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) dense[i] = remap[labels[i]];

  std::vector<double> class_size(classes, 0.0);
  for (int l : dense) class_size[l] += 1.0;
  double total_pairs = 0.0;
  for (double c : class_size) total_pairs += c * (c - 1.0) / 2.0;
  if (total_pairs == 0.0) {
    throw std::invalid_argument("dendrogram purity undefined: no class has two members");
  }

  // counts[node * classes + c] = leaves of class c below node.
  std::vector<double> counts(static_cast<std::size_t>(t.size()) * classes, 0.0);
  for (int v = 0; v < t.num_leaves(); ++v) {
    counts[static_cast<std::size_t>(t.leaf_of(v)) * classes + dense[v]] = 1.0;
  }
  const auto& leaves = t.leaf_counts();
  double score = 0.0;
  for (int v : t.postorder()) {
    const auto& nd = t.node(v);
    if (nd.vertex >= 0) continue;
    double* cv = &counts[static_cast<std::size_t>(v) * classes];
    for (int c : nd.children) {
      const double* cc = &counts[static_cast<std::size_t>(c) * classes];
      for (std::size_t k = 0; k < classes; ++k) cv[k] += cc[k];
    }
    for (std::size_t k = 0; k < classes; ++k) {
      // Same-class pairs whose LCA is exactly v.
      double pairs = cv[k] * (cv[k] - 1.0) / 2.0;
      for (int c : nd.children) {
        const double cc = counts[static_cast<std::size_t>(c) * classes + k];
        pairs -= cc * (cc - 1.0) / 2.0;
      }
      if (pairs > 0.0) score += pairs * cv[k] / leaves[v];
    }
  }
  return score / total_pairs;
}

double dasgupta_cost(const WeightedGraph& g, const PartitionTree& t) {
  check_match(g, t);
  const LcaIndex lca(t);
  const auto& leaves = t.leaf_counts();
  double cost = 0.0;
  for (const Edge& e : g.edges()) cost += e.weight * leaves[lca.lca_vertices(e.u, e.v)];
  return cost;
}

}  // namespace hypcse::entropy
