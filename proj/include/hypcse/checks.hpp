#pragma once

// Randomized property suites over the exact oracles. Each suite is seeded,
// so a failure is reproducible from its seed.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypcse/graph.hpp"
#include "hypcse/random.hpp"
#include "hypcse/tree.hpp"

namespace hypcse::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Cases examined.
  int cases = 0;
  /// Largest observed error where the suite measures one, else 0.
  double worst = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// Random graph on n vertices where every vertex has positive degree;
/// edges appear with probability `density`, weights uniform in [0.1, 2].
graph::WeightedGraph random_graph(int n, Rng& rng, double density = 0.7, bool connected = false);

/// Random hierarchy on n leaves: random agglomeration, then each internal
/// non-root node is collapsed into its parent with probability `collapse`.
tree::PartitionTree random_tree(int n, Rng& rng, double collapse = 0.3);

/// Distance-from-origin quantity of the geodesic segment between x and y,
/// found by sampling the Mobius parametrization densely and refining the
/// best bracket by golden-section search.
double geodesic_origin_sampled(std::span<const double> x, std::span<const double> y);

/// Structural entropy against its LCA form for every hierarchy of 50 graphs, n <= 5.
CheckResult lca_form(std::uint64_t seed = 1);
/// Binary minimum equals the unrestricted minimum on 50 graphs, n <= 5.
CheckResult binary_min(std::uint64_t seed = 2);
/// SE / H1 >= conductance on 500 (graph, tree) pairs, n <= 8.
CheckResult conductance_bound(std::uint64_t seed = 3);
/// Closed form against the sampling oracle on 500 random pairs.
CheckResult origin_distance(std::uint64_t seed = 4);
/// Soft-LCA loss at small temperature against the discrete cost on a
/// six-vertex tree-realizing embedding.
CheckResult hard_limit();
/// Analytic against central-difference gradients of each loss term through
/// the encoder, projector and learner over `draws` parameter draws.
CheckResult gradcheck(std::uint64_t seed = 6, int draws = 50);
/// Fast decoding with K = n - 1 against the naive decoder on 50 embeddings.
CheckResult decode_equivalence(std::uint64_t seed = 7);

/// Names accepted by run_check.
const std::vector<std::string>& check_names();
/// Throws UsageError for an unknown name.
CheckResult run_check(std::string_view name);

}  // namespace hypcse::checks
