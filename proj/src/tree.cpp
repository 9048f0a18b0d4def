#include "hypcse/tree.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace hypcse::tree {

void Dendrogram::validate() const {
  const int n = num_leaves;
  if (n < 1) throw std::invalid_argument("dendrogram needs at least one leaf");
  if (static_cast<int>(merges.size()) != n - 1) {
    throw std::invalid_argument("dendrogram must have n-1 merges");
  }
  std::vector<bool> used(static_cast<std::size_t>(2 * n - 1), false);
  for (std::size_t t = 0; t < merges.size(); ++t) {
    const Merge& m = merges[t];
    const int id = n + static_cast<int>(t);
    if (m.id != id) throw std::invalid_argument("merge ids must be n, n+1, ...");
    for (int child : {m.a, m.b}) {
      if (child < 0 || child >= id || used[child]) {
        throw std::invalid_argument("invalid or reused child in merge list");
      }
      used[child] = true;
    }
    if (m.a == m.b) throw std::invalid_argument("merge of a cluster with itself");
  }
}

PartitionTree::PartitionTree(std::vector<int> parent, std::vector<int> vertex_of_node) {
  const int size = static_cast<int>(parent.size());
  if (static_cast<int>(vertex_of_node.size()) != size || size == 0) {
    throw std::invalid_argument("parent and vertex arrays must be non-empty and equal length");
  }
  nodes_.resize(static_cast<std::size_t>(size));
  int leaves = 0;
  for (int i = 0; i < size; ++i) {
    nodes_[i].parent = parent[i];
    nodes_[i].vertex = vertex_of_node[i];
    if (parent[i] == -1) {
      if (root_ != -1) throw std::invalid_argument("tree has more than one root");
      root_ = i;
    } else if (parent[i] < 0 || parent[i] >= size || parent[i] == i) {
      throw std::invalid_argument("invalid parent index");
    } else {
      nodes_[parent[i]].children.push_back(i);
    }
    if (vertex_of_node[i] >= 0) ++leaves;
  }
  if (root_ == -1) throw std::invalid_argument("tree has no root");
  leaf_of_.assign(static_cast<std::size_t>(leaves), -1);
  for (int i = 0; i < size; ++i) {
    const int v = nodes_[i].vertex;
    if (v >= 0) {
      if (!nodes_[i].children.empty()) throw std::invalid_argument("leaf with children");
      if (v >= leaves || leaf_of_[v] != -1) {
        throw std::invalid_argument("leaf vertices must be distinct ids 0..n-1");
      }
      leaf_of_[v] = i;
    } else if (nodes_[i].children.empty()) {
      throw std::invalid_argument("internal node without children");
    }
  }

  depth_.assign(static_cast<std::size_t>(size), -1);
  leaf_counts_.assign(static_cast<std::size_t>(size), 0);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(size));
  std::vector<int> stack{root_};
  depth_[root_] = 0;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : nodes_[v].children) {
      depth_[c] = depth_[v] + 1;
      stack.push_back(c);
    }
  }
  if (static_cast<int>(order.size()) != size) {
    throw std::invalid_argument("tree is not connected (cycle or detached node)");
  }
  postorder_.assign(order.rbegin(), order.rend());
  for (int v : postorder_) {
    if (nodes_[v].vertex >= 0) leaf_counts_[v] = 1;
    if (nodes_[v].parent >= 0) leaf_counts_[nodes_[v].parent] += leaf_counts_[v];
  }
}

PartitionTree PartitionTree::from_dendrogram(const Dendrogram& d) {
  d.validate();
  const int n = d.num_leaves;
  std::vector<int> parent(static_cast<std::size_t>(2 * n - 1), -1);
  std::vector<int> vertex(static_cast<std::size_t>(2 * n - 1), -1);
  for (int i = 0; i < n; ++i) vertex[i] = i;
  for (const Merge& m : d.merges) {
    parent[m.a] = m.id;
    parent[m.b] = m.id;
  }
  return PartitionTree(std::move(parent), std::move(vertex));
}

PartitionTree PartitionTree::flat(int n) {
  if (n == 1) return PartitionTree({-1}, {0});
  std::vector<int> parent(static_cast<std::size_t>(n + 1), n);
  std::vector<int> vertex(static_cast<std::size_t>(n + 1), -1);
  parent[n] = -1;
  for (int i = 0; i < n; ++i) vertex[i] = i;
  return PartitionTree(std::move(parent), std::move(vertex));
}

bool PartitionTree::is_binary() const {
  return std::ranges::all_of(nodes_, [](const Node& nd) {
    return nd.vertex >= 0 || nd.children.size() == 2;
  });
}

Dendrogram PartitionTree::to_dendrogram() const {
  if (!is_binary()) throw std::invalid_argument("to_dendrogram requires a binary tree");
  Dendrogram d;
  d.num_leaves = num_leaves();
  std::vector<int> cluster_id(nodes_.size(), -1);
  for (int v = 0; v < d.num_leaves; ++v) cluster_id[leaf_of_[v]] = v;
  int next = d.num_leaves;
  for (int v : postorder_) {
    if (nodes_[v].vertex >= 0) continue;
    int a = cluster_id[nodes_[v].children[0]];
    int b = cluster_id[nodes_[v].children[1]];
    if (a > b) std::swap(a, b);
    cluster_id[v] = next;
    d.merges.push_back({a, b, next++});
  }
  return d;
}

LcaIndex::LcaIndex(const PartitionTree& tree) : tree_(&tree) {
  const int size = tree.size();
  int levels = 1;
  while ((1 << levels) < size) ++levels;
  up_.assign(static_cast<std::size_t>(levels), std::vector<int>(static_cast<std::size_t>(size)));
  for (int v = 0; v < size; ++v) {
    const int p = tree.node(v).parent;
    up_[0][v] = p < 0 ? v : p;
  }
  for (int l = 1; l < levels; ++l) {
    for (int v = 0; v < size; ++v) up_[l][v] = up_[l - 1][up_[l - 1][v]];
  }
}

int LcaIndex::lca_nodes(int a, int b) const {
  if (tree_->depth(a) < tree_->depth(b)) std::swap(a, b);
  int diff = tree_->depth(a) - tree_->depth(b);
  for (int l = 0; diff > 0; ++l, diff >>= 1) {
    if (diff & 1) a = up_[l][a];
  }
  if (a == b) return a;
  for (int l = static_cast<int>(up_.size()) - 1; l >= 0; --l) {
    if (up_[l][a] != up_[l][b]) {
      a = up_[l][a];
      b = up_[l][b];
    }
  }
  return up_[0][a];
}

int LcaIndex::lca_vertices(int i, int j) const {
  return lca_nodes(tree_->leaf_of(i), tree_->leaf_of(j));
}

std::string to_newick(const PartitionTree& tree) {
  std::ostringstream out;
  // Iterative DFS; children are written in stored order.
  struct Frame {
    int node;
    std::size_t next_child;
  };
  std::vector<Frame> stack{{tree.root(), 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& nd = tree.node(f.node);
    if (nd.vertex >= 0) {
      out << nd.vertex;
      stack.pop_back();
      continue;
    }
    if (f.next_child == 0) out << '(';
    if (f.next_child == nd.children.size()) {
      out << ')';
      stack.pop_back();
      continue;
    }
    if (f.next_child > 0) out << ',';
    const int child = nd.children[f.next_child++];
    stack.push_back({child, 0});
  }
  out << ';';
  return out.str();
}

PartitionTree parse_newick(std::string_view text) {
  std::vector<int> parent;
  std::vector<int> vertex;
  std::vector<int> open;  // stack of internal nodes
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto skip_length = [&] {
    skip_ws();
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      while (pos < text.size() && text[pos] != ',' && text[pos] != ')' && text[pos] != ';') ++pos;
    }
  };
  auto read_label = [&]() -> std::string {
    skip_ws();
    std::string label;
    while (pos < text.size() && text[pos] != ',' && text[pos] != ')' && text[pos] != '(' &&
           text[pos] != ':' && text[pos] != ';' && !std::isspace(static_cast<unsigned char>(text[pos]))) {
      label += text[pos++];
    }
    return label;
  };
  auto current_parent = [&] { return open.empty() ? -1 : open.back(); };

  skip_ws();
  bool done = false;
  bool expect_item = true;
  while (pos < text.size() && !done) {
    skip_ws();
    if (pos >= text.size()) break;
    const char c = text[pos];
    if (c == '(') {
      if (!expect_item) throw std::invalid_argument("newick: unexpected '('");
      if (open.empty() && !parent.empty()) throw std::invalid_argument("newick: multiple roots");
      parent.push_back(current_parent());
      vertex.push_back(-1);
      open.push_back(static_cast<int>(parent.size()) - 1);
      ++pos;
      expect_item = true;
    } else if (c == ',') {
      if (expect_item || open.empty()) throw std::invalid_argument("newick: unexpected ','");
      ++pos;
      expect_item = true;
    } else if (c == ')') {
      if (expect_item || open.empty()) throw std::invalid_argument("newick: unexpected ')'");
      ++pos;
      open.pop_back();
      read_label();  // internal label ignored
      skip_length();
      expect_item = false;
    } else if (c == ';') {
      if (!open.empty()) throw std::invalid_argument("newick: unbalanced parentheses");
      ++pos;
      done = true;
    } else {
      if (!expect_item) throw std::invalid_argument("newick: missing separator");
      const std::string label = read_label();
      if (label.empty()) throw std::invalid_argument("newick: empty leaf label");
      std::size_t used = 0;
      int id = -1;
      try {
        id = std::stoi(label, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("newick: leaf label '" + label + "' is not an integer");
      }
      if (used != label.size() || id < 0) {
        throw std::invalid_argument("newick: leaf label '" + label + "' is not a vertex id");
      }
      if (open.empty() && !parent.empty()) throw std::invalid_argument("newick: multiple roots");
      parent.push_back(current_parent());
      vertex.push_back(id);
      skip_length();
      expect_item = false;
    }
  }
  if (!done) throw std::invalid_argument("newick: missing terminating ';'");
  if (parent.empty()) throw std::invalid_argument("newick: empty tree");
  return PartitionTree(std::move(parent), std::move(vertex));
}

std::string merges_to_json(const Dendrogram& d) {
  std::ostringstream out;
  out << '[';
  for (std::size_t t = 0; t < d.merges.size(); ++t) {
    if (t) out << ',';
    out << '[' << d.merges[t].a << ',' << d.merges[t].b << ',' << d.merges[t].id << ']';
  }
  out << ']';
  return out.str();
}

std::vector<std::vector<int>> cluster_signature(const PartitionTree& tree) {
  std::vector<std::vector<int>> below(static_cast<std::size_t>(tree.size()));
  std::vector<std::vector<int>> sig;
  for (int v : tree.postorder()) {
    const auto& nd = tree.node(v);
    if (nd.vertex >= 0) {
      below[v] = {nd.vertex};
    } else {
      for (int c : nd.children) {
        below[v].insert(below[v].end(), below[c].begin(), below[c].end());
        below[c].clear();
        below[c].shrink_to_fit();
      }
      std::sort(below[v].begin(), below[v].end());
      sig.push_back(below[v]);
    }
  }
  std::sort(sig.begin(), sig.end());
  return sig;
}

}  // namespace hypcse::tree
