#include "hypcse/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>

#include "hypcse/diag.hpp"
#include "hypcse/random.hpp"

namespace hypcse::decode {

using geometry::PoincareVec;

std::vector<PoincareVec> normalize_to_boundary(std::span<const PoincareVec> z, double rho_max) {
  if (!(rho_max > 0.0 && rho_max < 1.0)) throw std::invalid_argument("rho_max must lie in (0, 1)");
  std::vector<PoincareVec> out;
  out.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    PoincareVec p = z[i];
    double norm = 0.0;
    for (double v : p.coords) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      diag::warn("zero embedding at row " + std::to_string(i) + "; using a seeded direction");
      Rng rng(i);
      while (norm == 0.0) {
        for (double& v : p.coords) v = rng.normal();
        norm = 0.0;
        for (double v : p.coords) norm += v * v;
        norm = std::sqrt(norm);
      }
    }
    for (double& v : p.coords) v *= rho_max / norm;
    out.push_back(std::move(p));
  }
  return out;
}

double closeness(std::span<const int> a, std::span<const int> b, std::span<const PoincareVec> z) {
  if (a.empty() || b.empty()) throw std::invalid_argument("closeness of an empty cluster");
  double best = -std::numeric_limits<double>::infinity();
  for (int i : a) {
    for (int j : b) best = std::max(best, geometry::geodesic_origin_distance(z[i], z[j]));
  }
  return best;
}

namespace {

bool better(const ScoredPair& x, const ScoredPair& y) {
  if (x.score != y.score) return x.score > y.score;
  return std::pair(x.i, x.j) < std::pair(y.i, y.j);
}

ScoredPair scored(double score, int a, int b) {
  return {score, std::min(a, b), std::max(a, b)};
}

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int root_keep, int root_drop) { parent_[root_drop] = root_keep; }

 private:
  std::vector<int> parent_;
};

}  // namespace

tree::Dendrogram kruskal_dendrogram(int n, std::vector<ScoredPair> pairs) {
  if (n < 1) throw std::invalid_argument("dendrogram needs at least one leaf");
  std::sort(pairs.begin(), pairs.end(), better);
  UnionFind uf(n);
  std::vector<int> cluster(static_cast<std::size_t>(n));
  std::iota(cluster.begin(), cluster.end(), 0);
  tree::Dendrogram d;
  d.num_leaves = n;
  for (const ScoredPair& p : pairs) {
    if (static_cast<int>(d.merges.size()) == n - 1) break;
    const int ra = uf.find(p.i);
    const int rb = uf.find(p.j);
    if (ra == rb) continue;
    const int id = n + static_cast<int>(d.merges.size());
    d.merges.push_back({std::min(cluster[ra], cluster[rb]), std::max(cluster[ra], cluster[rb]), id});
    uf.unite(ra, rb);
    cluster[ra] = id;
  }
  if (static_cast<int>(d.merges.size()) != n - 1) {
    throw std::invalid_argument("kruskal_dendrogram: pairs do not connect all vertices");
  }
  return d;
}

tree::Dendrogram decode_tree_naive(std::span<const PoincareVec> z, double rho_max) {
  const int n = static_cast<int>(z.size());
  if (n < 2) throw std::invalid_argument("decoding needs at least two points");
  const std::vector<PoincareVec> zn = normalize_to_boundary(z, rho_max);

  // best[a * n + b]: best vertex pair between the clusters in slots a and b.
  std::vector<ScoredPair> best(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const ScoredPair p = scored(geometry::geodesic_origin_distance(zn[a], zn[b]), a, b);
      best[static_cast<std::size_t>(a) * n + b] = p;
      best[static_cast<std::size_t>(b) * n + a] = p;
    }
  }
  std::vector<int> id(static_cast<std::size_t>(n));
  std::iota(id.begin(), id.end(), 0);
  std::vector<int> active(id);
  tree::Dendrogram d;
  d.num_leaves = n;

  auto merge_slots = [&](int a, int b) {
    const int new_id = n + static_cast<int>(d.merges.size());
    d.merges.push_back({std::min(id[a], id[b]), std::max(id[a], id[b]), new_id});
    id[a] = new_id;
    for (int c : active) {
      if (c == a || c == b) continue;
      ScoredPair& ac = best[static_cast<std::size_t>(a) * n + c];
      const ScoredPair& bc = best[static_cast<std::size_t>(b) * n + c];
      if (better(bc, ac)) ac = bc;
      best[static_cast<std::size_t>(c) * n + a] = ac;
    }
    active.erase(std::find(active.begin(), active.end(), b));
  };

  while (active.size() > 2) {
    int sa = -1;
    int sb = -1;
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const ScoredPair& p = best[static_cast<std::size_t>(active[x]) * n + active[y]];
        if (sa < 0 || better(p, best[static_cast<std::size_t>(sa) * n + sb])) {
          sa = active[x];
          sb = active[y];
        }
      }
    }
    merge_slots(sa, sb);
  }
  // The last two clusters hang directly below the root.
  merge_slots(active[0], active[1]);
  return d;
}

namespace {

// Static kd-tree over the rows of a matrix.
class KdTree {
 public:
  explicit KdTree(const Matrix& x) : x_(x), order_(x.rows()) {
    std::iota(order_.begin(), order_.end(), 0);
    if (!order_.empty()) build(0, order_.size());
  }

  /// k nearest rows to row q, excluding q, ordered by (distance, index).
  std::vector<int> query(int q, int k) const {
    Heap heap;
    search(0, q, static_cast<std::size_t>(k), heap);
    std::vector<int> out(heap.size());
    for (std::size_t t = heap.size(); t-- > 0;) {
      out[t] = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t dim = 0;
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  // Max-heap on (distance, index): the top is the current worst neighbor.
  using Heap = std::priority_queue<std::pair<double, int>>;

  int build(std::size_t begin, std::size_t end) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return idx;
    std::size_t dim = 0;
    double spread = -1.0;
    for (std::size_t c = 0; c < x_.cols(); ++c) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t t = begin; t < end; ++t) {
        lo = std::min(lo, x_(order_[t], c));
        hi = std::max(hi, x_(order_[t], c));
      }
      if (hi - lo > spread) {
        spread = hi - lo;
        dim = c;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return x_(a, dim) < x_(b, dim); });
    nodes_[idx].dim = dim;
    nodes_[idx].split = x_(order_[mid], dim);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[idx].left = left;
    nodes_[idx].right = right;
    return idx;
  }

  double sq_dist(std::size_t a, std::size_t b) const {
    double s = 0.0;
    for (std::size_t c = 0; c < x_.cols(); ++c) {
      const double d = x_(a, c) - x_(b, c);
      s += d * d;
    }
    return s;
  }

  void search(int node, int q, std::size_t k, Heap& heap) const {
    const Node& nd = nodes_[node];
    if (nd.left < 0) {
      for (std::size_t t = nd.begin; t < nd.end; ++t) {
        const int j = static_cast<int>(order_[t]);
        if (j == q) continue;
        const std::pair<double, int> cand{sq_dist(static_cast<std::size_t>(q), order_[t]), j};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double diff = x_(static_cast<std::size_t>(q), nd.dim) - nd.split;
    const int near = diff < 0.0 ? nd.left : nd.right;
    const int far = diff < 0.0 ? nd.right : nd.left;
    search(near, q, k, heap);
    // Equal distances must still be visited so index tie-breaks hold.
    if (heap.size() < k || diff * diff <= heap.top().first) search(far, q, k, heap);
  }

  const Matrix& x_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

Matrix to_matrix(std::span<const PoincareVec> z) {
  Matrix m(z.size(), z.empty() ? 0 : z.front().dim());
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::copy(z[i].coords.begin(), z[i].coords.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace

std::vector<std::vector<int>> knn_indices(const Matrix& x, int k) {
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  const int n = static_cast<int>(x.rows());
  const int kk = std::min(k, n - 1);
  const KdTree tree(x);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = tree.query(i, kk);
  return out;
}

tree::Dendrogram decode_tree_fast(std::span<const PoincareVec> z, int k, double rho_max) {
  const int n = static_cast<int>(z.size());
  if (k < 1) throw std::invalid_argument("K must be >= 1");
  if (n < 2) throw std::invalid_argument("decoding needs at least two points");
  const std::vector<PoincareVec> zn = normalize_to_boundary(z, rho_max);
  const auto neighbors = knn_indices(to_matrix(zn), k);

  std::vector<ScoredPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * neighbors.front().size());
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      // Each undirected pair is scored once, from its lower endpoint or from
      // the only side that lists it.
      if (j < i && std::find(neighbors[j].begin(), neighbors[j].end(), i) != neighbors[j].end()) continue;
      pairs.push_back(scored(geometry::geodesic_origin_distance(zn[i], zn[j]), i, j));
    }
  }

  UnionFind uf(n);
  int components = n;
  for (const auto& p : pairs) {
    const int a = uf.find(p.i);
    const int b = uf.find(p.j);
    if (a != b) {
      uf.unite(a, b);
      --components;
    }
  }
  if (components > 1) {
    diag::warn("neighbor graph has " + std::to_string(components) +
               " components; adding best cross-component pairs");
    // Best pair for every pair of components.
    std::vector<int> comp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) comp[i] = uf.find(i);
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
      if (label[comp[i]] < 0) label[comp[i]] = next++;
    }
    std::vector<ScoredPair> cross(static_cast<std::size_t>(next) * next,
                                  ScoredPair{-std::numeric_limits<double>::infinity(), -1, -1});
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const int a = label[comp[i]];
        const int b = label[comp[j]];
        if (a == b) continue;
        const ScoredPair p = scored(geometry::geodesic_origin_distance(zn[i], zn[j]), i, j);
        ScoredPair& slot = cross[static_cast<std::size_t>(std::min(a, b)) * next + std::max(a, b)];
        if (slot.i < 0 || better(p, slot)) slot = p;
      }
    }
    for (const auto& p : cross) {
      if (p.i >= 0) pairs.push_back(p);
    }
  }
  return kruskal_dendrogram(n, std::move(pairs));
}

tree::Dendrogram euclidean_single_linkage(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  if (n < 1) throw std::invalid_argument("single linkage needs at least one row");
  auto dist = [&](int a, int b) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(a, c) - x(b, c);
      s += d * d;
    }
    return std::sqrt(s);
  };
  // Prim's minimum spanning tree; single linkage merges its edges in order.
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<std::size_t>(n), -1);
  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<ScoredPair> mst;
  int current = 0;
  in_tree[0] = true;
  for (int step = 1; step < n; ++step) {
    int next = -1;
    for (int v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = dist(current, v);
      if (d < best[v]) {
        best[v] = d;
        from[v] = current;
      }
      if (next < 0 || best[v] < best[next]) next = v;
    }
    in_tree[next] = true;
    mst.push_back(scored(-best[next], from[next], next));
    current = next;
  }
  return kruskal_dendrogram(n, std::move(mst));
}

}  // namespace hypcse::decode
