#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypcse/checks.hpp"
#include "hypcse/decode.hpp"
#include "hypcse/diag.hpp"
#include "hypcse/geometry.hpp"

using namespace hypcse;
using namespace hypcse::decode;
using geometry::PoincareVec;

namespace {

const double kPi = 3.14159265358979323846;

PoincareVec polar(double degrees, double r) {
  const double a = degrees * kPi / 180.0;
  return PoincareVec{{r * std::cos(a), r * std::sin(a)}};
}

std::vector<PoincareVec> random_cloud(Rng& rng, int n, int dim) {
  std::vector<PoincareVec> z;
  for (int i = 0; i < n; ++i) {
    PoincareVec p;
    for (int c = 0; c < dim; ++c) p.coords.push_back(rng.uniform(-0.5, 0.5));
    z.push_back(p);
  }
  return z;
}

std::vector<std::vector<int>> signature(const tree::Dendrogram& d) {
  return tree::cluster_signature(tree::PartitionTree::from_dendrogram(d));
}

struct WarningCapture {
  std::vector<std::string> messages;
  WarningCapture() {
    diag::set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { diag::set_warning_sink({}); }
};

double seconds_for(const std::vector<PoincareVec>& z) {
  double best = 1e9;
  for (int rep = 0; rep < 3; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    decode_tree_fast(z, 10);
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

TEST_CASE("boundary normalization") {
  std::vector<PoincareVec> z{PoincareVec{{0.2, 0}}};
  std::vector<PoincareVec> out = normalize_to_boundary(z, 0.99);
  CHECK(out[0].coords[0] == doctest::Approx(0.99));
  CHECK(out[0].coords[1] == 0.0);

  Rng rng(91);
  std::vector<PoincareVec> cloud = random_cloud(rng, 40, 2);
  std::vector<PoincareVec> norm = normalize_to_boundary(cloud, 0.99);
  std::vector<int> before(40), after(40);
  for (int i = 0; i < 40; ++i) before[i] = after[i] = i;
  auto angle = [](const PoincareVec& p) { return std::atan2(p.coords[1], p.coords[0]); };
  std::sort(before.begin(), before.end(), [&](int a, int b) { return angle(cloud[a]) < angle(cloud[b]); });
  std::sort(after.begin(), after.end(), [&](int a, int b) { return angle(norm[a]) < angle(norm[b]); });
  CHECK(before == after);
  for (const PoincareVec& p : norm) CHECK(std::hypot(p.coords[0], p.coords[1]) == doctest::Approx(0.99).epsilon(1e-12));

  WarningCapture warn;
  std::vector<PoincareVec> zero{PoincareVec{{0, 0, 0}}, PoincareVec{{0, 0, 0}}};
  std::vector<PoincareVec> fixed = normalize_to_boundary(zero, 0.9);
  CHECK(warn.messages.size() >= 1u);
  CHECK(fixed[0].coords != fixed[1].coords);
  CHECK(normalize_to_boundary(zero, 0.9)[0].coords == fixed[0].coords);
}

TEST_CASE("closeness") {
  std::vector<PoincareVec> z{polar(0, 0.9), polar(20, 0.9), polar(185, 0.9)};
  std::vector<int> a{0}, b{1}, c{2};
  CHECK(closeness(a, b, z) == geometry::geodesic_origin_distance(z[0], z[1]));
  CHECK(closeness(a, c, z) == closeness(c, a, z));
  CHECK(closeness(a, b, z) > closeness(a, c, z));
  CHECK(closeness(a, b, z) == doctest::Approx(checks::geodesic_origin_sampled(z[0].coords, z[1].coords)).epsilon(1e-6));
  CHECK(closeness(a, c, z) == doctest::Approx(checks::geodesic_origin_sampled(z[0].coords, z[2].coords)).epsilon(1e-6));
  std::vector<int> ab{0, 1};
  CHECK(closeness(ab, c, z) == std::max(closeness(a, c, z), closeness(b, c, z)));
}

TEST_CASE("naive decoding") {
  std::vector<PoincareVec> two{polar(0, 0.5), polar(90, 0.5)};
  tree::Dendrogram d2 = decode_tree_naive(two);
  CHECK(d2.merges == std::vector<tree::Merge>{{0, 1, 2}});
  CHECK(decode_tree_fast(two, 1).merges == d2.merges);

  std::vector<PoincareVec> three{polar(0, 0.8), polar(170, 0.8), polar(12, 0.8)};
  CHECK(decode_tree_naive(three).merges.front() == tree::Merge{0, 2, 3});

  std::vector<PoincareVec> square{polar(0, 0.8), polar(90, 0.8), polar(180, 0.8), polar(270, 0.8)};
  tree::Dendrogram canon = decode_tree_naive(square);
  CHECK(signature(canon) == tree::cluster_signature(tree::parse_newick("(((0,1),3),2);")));
}

TEST_CASE("fast decoding matches naive on complete neighbor graphs") {
  checks::CheckResult r = checks::decode_equivalence();
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("decoding is rotation invariant") {
  Rng rng(92);
  std::vector<PoincareVec> z = random_cloud(rng, 30, 2);
  std::vector<PoincareVec> turned = z;
  const double c = std::cos(1.1), s = std::sin(1.1);
  for (PoincareVec& p : turned) {
    const double x = p.coords[0], y = p.coords[1];
    p.coords = {c * x - s * y, s * x + c * y};
  }
  CHECK(signature(decode_tree_naive(z)) == signature(decode_tree_naive(turned)));
  CHECK(signature(decode_tree_fast(z, 5)) == signature(decode_tree_fast(turned, 5)));
}

TEST_CASE("fast decoding completes a disconnected neighbor graph") {
  std::vector<PoincareVec> z{polar(0, 0.9), polar(1, 0.9), polar(120, 0.9), polar(121, 0.9),
                             polar(240, 0.9), polar(241, 0.9)};
  WarningCapture warn;
  tree::Dendrogram d = decode_tree_fast(z, 1);
  CHECK_NOTHROW(d.validate());
  CHECK(warn.messages.size() == 1u);
  CHECK(signature(d) == signature(decode_tree_naive(z)));
}

TEST_CASE("kruskal dendrogram") {
  tree::Dendrogram d = kruskal_dendrogram(3, {{0.5, 0, 1}, {0.9, 1, 2}, {0.1, 0, 2}});
  CHECK(d.merges == std::vector<tree::Merge>{{1, 2, 3}, {0, 3, 4}});
  CHECK_THROWS_AS(kruskal_dendrogram(3, {{0.5, 0, 1}}), std::invalid_argument);
}

TEST_CASE("nearest neighbor indices") {
  Rng rng(93);
  Matrix x(80, 3);
  for (double& v : x.data()) v = rng.normal();
  std::vector<std::vector<int>> nn = knn_indices(x, 6);
  for (int i = 0; i < 80; ++i) {
    std::vector<int> order;
    for (int j = 0; j < 80; ++j) {
      if (j != i) order.push_back(j);
    }
    auto dist = [&](int j) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      return s;
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(a) < dist(b); });
    order.resize(6);
    CHECK(nn[i] == order);
  }
}

TEST_CASE("euclidean single linkage") {
  Matrix x(4, 1);
  x(0, 0) = 0.0;
  x(1, 0) = 10.0;
  x(2, 0) = 0.5;
  x(3, 0) = 11.0;
  CHECK(signature(euclidean_single_linkage(x)) ==
        tree::cluster_signature(tree::parse_newick("((0,2),(1,3));")));
}

TEST_CASE("fast decoding scales near n log n") {
  Rng rng(94);
  std::vector<PoincareVec> small = random_cloud(rng, 1024, 2);
  std::vector<PoincareVec> large = random_cloud(rng, 2048, 2);
  const double t1 = seconds_for(small);
  const double t2 = seconds_for(large);
  INFO("1024: " << t1 << " s, 2048: " << t2 << " s");
  CHECK(t2 < 3.0 * t1 + 0.01);
}
