#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hypcse/checks.hpp"
#include "hypcse/entropy.hpp"
#include "hypcse/errors.hpp"
#include "hypcse/tree.hpp"

using namespace hypcse;
using namespace hypcse::entropy;
using graph::WeightedGraph;
using tree::PartitionTree;
using tree::parse_newick;

namespace {

WeightedGraph triangle() { return WeightedGraph(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}); }
WeightedGraph single_edge() { return WeightedGraph(2, {{0, 1, 1}}); }

// Structural entropy straight from vertex sets, independent of tree_stats.
double se_by_sets(const WeightedGraph& g, const PartitionTree& t) {
  const double vol_g = g.total_volume();
  std::vector<std::vector<char>> inside(static_cast<std::size_t>(t.size()),
                                        std::vector<char>(static_cast<std::size_t>(g.num_vertices()), 0));
  for (int v = 0; v < g.num_vertices(); ++v) {
    for (int a = t.leaf_of(v); a != -1; a = t.node(a).parent) inside[a][v] = 1;
  }
  auto vol = [&](int a) {
    double s = 0.0;
    for (int v = 0; v < g.num_vertices(); ++v) s += inside[a][v] ? g.degree(v) : 0.0;
    return s;
  };
  double h = 0.0;
  for (int a = 0; a < t.size(); ++a) {
    if (a == t.root()) continue;
    double cut = 0.0;
    for (const graph::Edge& e : g.edges()) {
      if (inside[a][e.u] != inside[a][e.v]) cut += e.weight;
    }
    if (cut == 0.0) continue;
    h -= cut / vol_g * std::log2(vol(a) / vol(t.node(a).parent));
  }
  return h;
}

int count_trees(int n, bool binary) {
  int count = 0;
  enumerate_trees(n, binary, [&](const PartitionTree&) { ++count; });
  return count;
}

}  // namespace

TEST_CASE("structural entropy fixtures") {
  CHECK(structural_entropy(single_edge(), PartitionTree::flat(2)) == doctest::Approx(1.0));
  CHECK(structural_entropy_lca(single_edge(), PartitionTree::flat(2)) == doctest::Approx(1.0));
  CHECK(se_cost(single_edge(), PartitionTree::flat(2)) == doctest::Approx(1.0));

  PartitionTree flat = PartitionTree::flat(3);
  PartitionTree merged = parse_newick("((0,1),2);");
  CHECK(structural_entropy(triangle(), flat) == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
  CHECK(structural_entropy_lca(triangle(), flat) == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
  const double binary = 1.0 / 3.0 + 2.0 / 3.0 * std::log2(3.0);
  CHECK(structural_entropy(triangle(), merged) == doctest::Approx(binary).epsilon(1e-12));
  CHECK(se_by_sets(triangle(), merged) == doctest::Approx(binary).epsilon(1e-12));
  CHECK(se_cost(triangle(), flat) == doctest::Approx(3.0 * std::log2(6.0)));
  CHECK(leaf_term(triangle()) == doctest::Approx(1.0));

  CHECK_THROWS_AS(structural_entropy(triangle(), PartitionTree::flat(4)), DataError);
}

TEST_CASE("one-dimensional entropy") {
  CHECK(one_dim_entropy(triangle()) == doctest::Approx(std::log2(3.0)));
  CHECK(one_dim_entropy(single_edge()) == doctest::Approx(1.0));
  WeightedGraph star(4, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}});
  CHECK(one_dim_entropy(star) == doctest::Approx(1.79248125036).epsilon(1e-10));
}

TEST_CASE("entropy forms agree") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 7;
    WeightedGraph g = checks::random_graph(n, rng);
    PartitionTree tr = checks::random_tree(n, rng);
    const double h1 = se_by_sets(g, tr);
    CHECK(structural_entropy(g, tr) == doctest::Approx(h1).epsilon(1e-9));
    CHECK(std::abs(structural_entropy_lca(g, tr) - h1) < 1e-9);
    const double affine = 2.0 / g.total_volume() * se_cost(g, tr) - leaf_term(g);
    CHECK(std::abs(affine - h1) < 1e-9);
  }
}

TEST_CASE("tree enumeration and brute-force minimum") {
  CHECK(count_trees(3, false) == 4);
  CHECK(count_trees(3, true) == 3);
  CHECK(count_trees(4, false) == 26);
  CHECK(count_trees(4, true) == 15);
  CHECK(count_trees(5, true) == 105);

  MinimumTree tri = min_se_bruteforce(triangle(), false);
  CHECK(tri.entropy == doctest::Approx(1.0 / 3.0 + 2.0 / 3.0 * std::log2(3.0)));
  CHECK(tri.tree.is_binary());
  CHECK(min_se_bruteforce(single_edge(), false).entropy == doctest::Approx(1.0));
  Rng rng(30);
  CHECK_THROWS_AS(min_se_bruteforce(checks::random_graph(8, rng), false), std::invalid_argument);
  CHECK_THROWS_AS(min_se_bruteforce(checks::random_graph(10, rng), true), std::invalid_argument);
}

TEST_CASE("binary minimum equals unrestricted minimum") {
  Rng rng(32);
  for (int t = 0; t < 20; ++t) {
    WeightedGraph g = checks::random_graph(3 + t % 3, rng);
    CHECK(std::abs(min_se_bruteforce(g, true).entropy - min_se_bruteforce(g, false).entropy) < 1e-9);
  }
}

TEST_CASE("conductance ratio bound") {
  CHECK(check_conductance_bound(triangle(), PartitionTree::flat(3)));

  // The unit path has conductance 1; the bound holds for the flat tree and
  // the tree grouping the endpoints, and fails for the other two.
  WeightedGraph p3(3, {{0, 1, 1}, {1, 2, 1}});
  CHECK(check_conductance_bound(p3, parse_newick("(0,1,2);")));
  CHECK(check_conductance_bound(p3, parse_newick("((0,2),1);")));
  for (const char* text : {"((0,1),2);", "((1,2),0);"}) {
    const double rho = structural_entropy(p3, parse_newick(text)) / one_dim_entropy(p3);
    CHECK(rho == doctest::Approx((0.5 + 0.5 * std::log2(3.0)) / 1.5));
    CHECK_FALSE(check_conductance_bound(p3, parse_newick(text)));
  }
}

TEST_CASE("conductance ratio counterexample") {
  // A root child holding more than half the volume: its cut is compared
  // against its own volume, not the smaller side.
  WeightedGraph g(3, {{0, 1, 0.570}, {1, 2, 0.378}});
  PartitionTree t = parse_newick("(2,(0,1));");
  const double rho = structural_entropy(g, t) / one_dim_entropy(g);
  const double phi = graph::conductance(g).value;
  CHECK(phi == doctest::Approx(1.0));
  CHECK(rho == doctest::Approx(0.8700).epsilon(1e-3));
  CHECK_FALSE(check_conductance_bound(g, t));
}

TEST_CASE("conductance ratio is an average of node ratios") {
  Rng rng(33);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 7;
    WeightedGraph g = checks::random_graph(n, rng, 0.5, true);
    PartitionTree tr = checks::random_tree(n, rng);
    TreeStats s = tree_stats(g, tr);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int a = 0; a < tr.size(); ++a) {
      if (a == tr.root() || s.volume[a] == s.volume[tr.node(a).parent]) continue;
      lo = std::min(lo, s.cut[a] / s.volume[a]);
      hi = std::max(hi, s.cut[a] / s.volume[a]);
    }
    const double rho = structural_entropy(g, tr) / one_dim_entropy(g);
    CHECK(rho >= lo - 1e-9);
    CHECK(rho <= hi + 1e-9);
  }
}

TEST_CASE("dendrogram purity") {
  std::vector<int> aabb{0, 0, 1, 1};
  CHECK(dendrogram_purity(parse_newick("((0,1),(2,3));"), aabb) == doctest::Approx(1.0));
  CHECK(dendrogram_purity(parse_newick("((0,2),(1,3));"), aabb) == doctest::Approx(0.5));
  std::vector<int> aab{0, 0, 1};
  CHECK(dendrogram_purity(parse_newick("((0,2),1);"), aab) == doctest::Approx(2.0 / 3.0));
  std::vector<int> distinct{0, 1, 2};
  CHECK_THROWS_AS(dendrogram_purity(PartitionTree::flat(3), distinct), std::invalid_argument);

  Rng rng(34);
  for (int t = 0; t < 50; ++t) {
    PartitionTree tr = checks::random_tree(10, rng);
    std::vector<int> labels(10);
    for (int& l : labels) l = static_cast<int>(rng.index(3));
    labels[0] = labels[1];
    const double dp = dendrogram_purity(tr, labels);
    CHECK(dp >= 0.0);
    CHECK(dp <= 1.0);
  }
}

TEST_CASE("dasgupta cost") {
  CHECK(dasgupta_cost(triangle(), parse_newick("((0,1),2);")) == doctest::Approx(8.0));
  CHECK(dasgupta_cost(single_edge(), PartitionTree::flat(2)) == doctest::Approx(2.0));
  Rng rng(35);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 9;
    WeightedGraph g = checks::random_graph(n, rng);
    double sum = 0.0;
    for (const graph::Edge& e : g.edges()) sum += e.weight;
    CHECK(dasgupta_cost(g, checks::random_tree(n, rng)) >= 2.0 * sum - 1e-12);
  }
}
