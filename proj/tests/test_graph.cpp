#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "hypcse/checks.hpp"
#include "hypcse/graph.hpp"

using namespace hypcse;
using namespace hypcse::graph;

namespace {

WeightedGraph triangle() { return WeightedGraph(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}}); }
WeightedGraph path3() { return WeightedGraph(3, {{0, 1, 1}, {1, 2, 1}}); }

}  // namespace

TEST_CASE("graph construction invariants") {
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 1}, {1, 0, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(WeightedGraph(2, {{0, 2, 1}}), std::invalid_argument);

  WeightedGraph g(3, {{2, 0, 1.5}, {1, 0, 0.5}});
  CHECK(g.edges()[0] == Edge{0, 1, 0.5});
  CHECK(g.edges()[1] == Edge{0, 2, 1.5});
  CHECK(g.degree(0) == 2.0);
  CHECK(g.total_volume() == 4.0);
}

TEST_CASE("kNN graph") {
  Matrix two(2, 3, 0.5);
  WeightedGraph g = build_knn_graph(two, {1, 1.0, false});
  REQUIRE(g.num_edges() == 1);
  CHECK(g.edges()[0].weight == 1.0);

  Matrix pair(2, 2);
  pair(1, 0) = 1.0;
  pair(1, 1) = 1.0;
  CHECK(build_knn_graph(pair, {1, 1.0, false}).edges()[0].weight ==
        doctest::Approx(std::exp(-1.0)));

  Rng rng(21);
  Matrix x(30, 4);
  for (double& v : x.data()) v = rng.normal();
  WeightedGraph full = build_knn_graph(x, {29, 1.0, true});
  CHECK(full.num_edges() == 30u * 29u / 2u);

  for (int k : {1, 3, 10}) {
    WeightedGraph h = build_knn_graph(x, {k, 1.0, true});
    CHECK(h.num_edges() >= static_cast<std::size_t>(k * 30 / 2));
    CHECK(h.num_edges() <= static_cast<std::size_t>(k * 30));
    for (const Edge& e : h.edges()) CHECK(e.u < e.v);
    CHECK(h.features() == x);
  }
}

TEST_CASE("standardized columns") {
  Matrix x(3, 2);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  for (int r = 0; r < 3; ++r) x(r, 1) = 7;
  Matrix z = standardize_columns(x);
  CHECK(z(0, 0) + z(1, 0) + z(2, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) * z(2, 0) + z(0, 0) * z(0, 0) == doctest::Approx(3.0));
  CHECK(z(1, 1) == 0.0);
}

TEST_CASE("volume and cut") {
  WeightedGraph t = triangle();
  CHECK(volume(t, VertexSubset(3, std::vector<int>{0, 1, 2})) == 6.0);
  CHECK(volume(t, VertexSubset(3, std::vector<int>{0})) == 2.0);
  CHECK(volume(t, VertexSubset(3)) == 0.0);
  CHECK(cut(t, VertexSubset(3, std::vector<int>{0})) == 2.0);
  CHECK(cut(t, VertexSubset(3)) == 0.0);
  CHECK(cut(t, VertexSubset::from_bits(3, 7)) == 0.0);
  CHECK(cut(path3(), VertexSubset(3, std::vector<int>{1})) == 2.0);

  Rng rng(22);
  for (int t2 = 0; t2 < 20; ++t2) {
    WeightedGraph g = checks::random_graph(8, rng);
    double sum = 0.0;
    for (const Edge& e : g.edges()) sum += e.weight;
    CHECK(volume(g, VertexSubset::from_bits(8, 255)) == doctest::Approx(2.0 * sum).epsilon(1e-9));
  }
}

TEST_CASE("conductance") {
  CHECK(conductance(path3()).value == doctest::Approx(1.0));
  CHECK(conductance(triangle()).value == doctest::Approx(1.0));

  WeightedGraph bridged(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}, {2, 3, 1}});
  CHECK(conductance(bridged).value == doctest::Approx(1.0 / 7.0));

  ConductanceResult split = conductance(WeightedGraph(4, {{0, 1, 1}, {2, 3, 1}}));
  CHECK(split.disconnected);
  CHECK(split.value == 0.0);

  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    const double phi = conductance(checks::random_graph(7, rng, 0.5, true)).value;
    CHECK(phi > 0.0);
    CHECK(phi <= 1.0 + 1e-12);
  }
}

TEST_CASE("subgraph sampling") {
  Rng rng(24);
  WeightedGraph g = checks::random_graph(50, rng, 0.2, true);

  std::vector<Subgraph> whole = subgraph_sample(g, 80, 4, 1);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].graph.edges() == g.edges());

  std::vector<Subgraph> a = subgraph_sample(g, 12, 3, 9);
  std::vector<Subgraph> b = subgraph_sample(g, 12, 3, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].vertices == b[i].vertices);

  std::set<int> seen;
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i + 1 < a.size()) CHECK(a[i].vertices.size() == 12u);
    CHECK(a[i].vertices.size() <= 12u);
    CHECK(a[i].graph.num_vertices() == static_cast<int>(a[i].vertices.size()));
    seen.insert(a[i].vertices.begin(), a[i].vertices.end());
    total += a[i].vertices.size();
  }
  CHECK(seen.size() == total);
  CHECK(a.size() >= 4u);
}

TEST_CASE("induced subgraph keeps features") {
  Matrix x(3, 1);
  x(0, 0) = 1;
  x(1, 0) = 2;
  x(2, 0) = 3;
  WeightedGraph g = triangle().with_features(x);
  std::vector<int> keep{2, 0};
  WeightedGraph h = g.induced(keep);
  CHECK(h.num_edges() == 1u);
  CHECK(h.features()(0, 0) == 3.0);
  CHECK(h.features()(1, 0) == 1.0);
  CHECK(g.is_connected());
  CHECK_FALSE(WeightedGraph(3, {{0, 1, 1}}).is_connected());
}
