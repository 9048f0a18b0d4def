#include "hypcse/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "hypcse/cse.hpp"
#include "hypcse/decode.hpp"
#include "hypcse/entropy.hpp"
#include "hypcse/errors.hpp"
#include "hypcse/geometry.hpp"
#include "hypcse/objective.hpp"

namespace hypcse::checks {

namespace {

using Clock = std::chrono::steady_clock;

CheckResult timed(std::string name, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = std::move(name);
  const auto start = Clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> mobius_add(std::span<const double> x, std::span<const double> y) {
  const double xy = dot(x, y);
  const double xx = dot(x, x);
  const double yy = dot(y, y);
  const double den = 1.0 + 2.0 * xy + xx * yy;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = ((1.0 + 2.0 * xy + yy) * x[i] + (1.0 - xx) * y[i]) / den;
  }
  return out;
}

std::vector<double> mobius_scale(double r, std::span<const double> v) {
  const double norm = std::sqrt(dot(v, v));
  std::vector<double> out(v.size(), 0.0);
  if (norm == 0.0) return out;
  const double s = std::tanh(r * std::atanh(norm)) / norm;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

std::vector<double> random_ball_point(Rng& rng, std::size_t dim, double max_radius) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm < 1e-9) {
    for (auto& c : v) c = rng.normal();
    norm = std::sqrt(dot(v, v));
  }
  const double r = max_radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (auto& c : v) c *= r / norm;
  return v;
}

}  // namespace

graph::WeightedGraph random_graph(int n, Rng& rng, double density, bool connected) {
  for (;;) {
    std::vector<graph::Edge> edges;
    for (int u = 0; u < n; ++u) {
      for (int v = u + 1; v < n; ++v) {
        if (rng.bernoulli(density)) edges.push_back({u, v, rng.uniform(0.1, 2.0)});
      }
    }
    graph::WeightedGraph g(n, std::move(edges));
    const bool degrees_ok = std::all_of(g.degrees().begin(), g.degrees().end(),
                                        [](double d) { return d > 0.0; });
    if (degrees_ok && (!connected || g.is_connected())) return g;
  }
}

tree::PartitionTree random_tree(int n, Rng& rng, double collapse) {
  const int total = 2 * n - 1;
  std::vector<int> parent(static_cast<std::size_t>(total), -1);
  std::vector<int> active(static_cast<std::size_t>(n));
  std::iota(active.begin(), active.end(), 0);
  for (int id = n; id < total; ++id) {
    const std::size_t a = rng.index(active.size());
    const int ca = active[a];
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(a));
    const std::size_t b = rng.index(active.size());
    const int cb = active[b];
    active[b] = id;
    parent[static_cast<std::size_t>(ca)] = id;
    parent[static_cast<std::size_t>(cb)] = id;
  }
  // Collapsed nodes hand their children to the nearest kept ancestor.
  std::vector<bool> keep(static_cast<std::size_t>(total), true);
  for (int id = n; id < total - 1; ++id) keep[static_cast<std::size_t>(id)] = !rng.bernoulli(collapse);
  std::vector<int> new_id(static_cast<std::size_t>(total), -1);
  int next = 0;
  for (int id = 0; id < total; ++id) {
    if (keep[static_cast<std::size_t>(id)]) new_id[static_cast<std::size_t>(id)] = next++;
  }
  std::vector<int> out_parent(static_cast<std::size_t>(next), -1);
  std::vector<int> vertex(static_cast<std::size_t>(next), -1);
  for (int id = 0; id < total; ++id) {
    if (!keep[static_cast<std::size_t>(id)]) continue;
    int p = parent[static_cast<std::size_t>(id)];
    while (p >= 0 && !keep[static_cast<std::size_t>(p)]) p = parent[static_cast<std::size_t>(p)];
    const auto nid = static_cast<std::size_t>(new_id[static_cast<std::size_t>(id)]);
    out_parent[nid] = p < 0 ? -1 : new_id[static_cast<std::size_t>(p)];
    if (id < n) vertex[nid] = id;
  }
  return tree::PartitionTree(std::move(out_parent), std::move(vertex));
}

double geodesic_origin_sampled(std::span<const double> x, std::span<const double> y) {
  std::vector<double> neg_x(x.begin(), x.end());
  for (auto& c : neg_x) c = -c;
  const std::vector<double> dir = mobius_add(neg_x, y);
  auto norm_at = [&](double s) {
    const std::vector<double> p = mobius_add(x, mobius_scale(s, dir));
    return std::sqrt(dot(p, p));
  };
  constexpr int kSamples = 4096;
  int best = 0;
  double best_norm = norm_at(0.0);
  for (int i = 1; i <= kSamples; ++i) {
    const double v = norm_at(static_cast<double>(i) / kSamples);
    if (v < best_norm) {
      best_norm = v;
      best = i;
    }
  }
  double lo = std::max(0, best - 1) / static_cast<double>(kSamples);
  double hi = std::min(kSamples, best + 1) / static_cast<double>(kSamples);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = norm_at(a);
  double fb = norm_at(b);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = norm_at(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = norm_at(b);
    }
  }
  const double rho = std::min({best_norm, fa, fb});
  // Reflecting the origin through the geodesic lands at Euclidean norm
  // tanh(2 d), where d = 2 artanh(rho) is the hyperbolic distance.
  const double reflected = 2.0 * rho / (1.0 + rho * rho);
  return 0.5 * std::atanh(reflected * reflected);
}

CheckResult lca_form(std::uint64_t seed) {
  return timed("lca_form", [&](CheckResult& r) {
    Rng rng(seed);
    r.passed = true;
    for (int k = 0; k < 50; ++k) {
      const int n = 2 + k % 4;
      const graph::WeightedGraph g = random_graph(n, rng);
      entropy::enumerate_trees(n, false, [&](const tree::PartitionTree& t) {
        const double err =
            std::abs(entropy::structural_entropy(g, t) - entropy::structural_entropy_lca(g, t));
        r.worst = std::max(r.worst, err);
        ++r.cases;
        if (!(err < 1e-9)) r.passed = false;
      });
    }
    r.detail = std::to_string(r.cases) + " (graph, tree) pairs, max |diff| " + fmt(r.worst);
  });
}

CheckResult binary_min(std::uint64_t seed) {
  return timed("binary_min", [&](CheckResult& r) {
    Rng rng(seed);
    r.passed = true;
    for (int k = 0; k < 50; ++k) {
      const int n = 2 + k % 4;
      const graph::WeightedGraph g = random_graph(n, rng);
      const double binary = entropy::min_se_bruteforce(g, true).entropy;
      const double any = entropy::min_se_bruteforce(g, false).entropy;
      const double err = std::abs(binary - any);
      r.worst = std::max(r.worst, err);
      ++r.cases;
      if (!(err < 1e-9)) r.passed = false;
    }
    r.detail = std::to_string(r.cases) + " graphs, max |binary min - global min| " + fmt(r.worst);
  });
}

CheckResult conductance_bound(std::uint64_t seed) {
  return timed("conductance_bound", [&](CheckResult& r) {
    Rng rng(seed);
    r.passed = true;
    int violations = 0;
    for (int k = 0; k < 500; ++k) {
      const int n = 2 + static_cast<int>(rng.index(7));
      const graph::WeightedGraph g = random_graph(n, rng, 0.5, true);
      const tree::PartitionTree t = random_tree(n, rng);
      ++r.cases;
      if (!entropy::check_conductance_bound(g, t)) ++violations;
    }
    r.passed = violations == 0;
    r.detail = std::to_string(r.cases) + " pairs, " + std::to_string(violations) + " violations";
  });
}

CheckResult origin_distance(std::uint64_t seed) {
  return timed("origin_distance", [&](CheckResult& r) {
    Rng rng(seed);
    r.passed = true;
    int skipped = 0;
    while (r.cases < 500) {
      const std::size_t dim = r.cases < 400 ? 2 : 3;
      const auto x = random_ball_point(rng, dim, 0.95);
      const auto y = random_ball_point(rng, dim, 0.95);
      std::vector<double> diff(dim);
      for (std::size_t i = 0; i < dim; ++i) diff[i] = x[i] - y[i];
      // Degenerate inputs: a point at the origin, or coincident endpoints.
      if (dot(x, x) < 1e-6 || dot(y, y) < 1e-6 || dot(diff, diff) < 1e-8) {
        ++skipped;
        continue;
      }
      const double err =
          std::abs(geometry::geodesic_origin_distance(x, y) - geodesic_origin_sampled(x, y));
      r.worst = std::max(r.worst, err);
      ++r.cases;
      if (!(err < 1e-6)) r.passed = false;
    }
    r.detail = std::to_string(r.cases) + " pairs (" + std::to_string(skipped) +
               " degenerate skipped), max |diff| " + fmt(r.worst);
  });
}

CheckResult hard_limit() {
  return timed("hard_limit", [&](CheckResult& r) {
    // Tree (((0,1),2),((3,4),5)); every edge joins the most separated pair
    // under its LCA.
    const double angles_deg[] = {0.0, 15.0, 45.0, 130.0, 115.0, 90.0};
    std::vector<geometry::PoincareVec> pts;
    for (double a : angles_deg) {
      const double rad = a * 3.14159265358979323846 / 180.0;
      pts.push_back({{0.9 * std::cos(rad), 0.9 * std::sin(rad)}});
    }
    const graph::WeightedGraph g(6, {{0, 1, 1.0}, {3, 4, 1.0}, {0, 2, 1.0}, {3, 5, 1.0}, {0, 3, 1.0}});
    const tree::PartitionTree realized =
        tree::PartitionTree::from_dendrogram(decode::decode_tree_naive(pts));
    const tree::PartitionTree intended = tree::parse_newick("(((0,1),2),((3,4),5));");
    if (tree::cluster_signature(realized) != tree::cluster_signature(intended)) {
      r.passed = false;
      r.detail = "fixture does not decode to the intended tree: " + tree::to_newick(realized);
      return;
    }
    const double target = entropy::se_cost(g, realized);
    const cse::EmbeddingSet z = cse::EmbeddingSet::from_poincare(pts, g.degrees());
    std::vector<double> gaps;
    for (double t1 : {10.0, 1.0, 0.1, 1e-3}) {
      cse::CseConfig cfg;
      cfg.t1 = t1;
      gaps.push_back(std::abs(cse::cse_loss(g, z, cfg) - target));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] <= gaps[i - 1] + 1e-12;
    r.cases = static_cast<int>(gaps.size());
    r.worst = gaps.back();
    r.passed = monotone && gaps.back() < 1e-3;
    r.detail = "C = " + fmt(target) + ", gaps at t1 = 10, 1, 0.1, 1e-3: " + fmt(gaps[0]) + ", " +
               fmt(gaps[1]) + ", " + fmt(gaps[2]) + ", " + fmt(gaps[3]);
  });
}

CheckResult gradcheck(std::uint64_t seed, int draws) {
  return timed("gradcheck", [&](CheckResult& r) {
    Rng rng(seed);
    constexpr int n = 6;
    constexpr double h = 1e-5;
    objective::LossConfig lc;
    lc.p = 2;
    lc.t1 = 1.0;
    objective::ModelConfig mc;
    mc.hidden = 4;
    mc.embed = 3;
    mc.learner = model::LearnerKind::Gcn;
    double worst[3] = {0.0, 0.0, 0.0};
    for (int draw = 0; draw < draws; ++draw) {
      // Odd draws take the structural term at a common radius.
      lc.cse_radius = draw % 2 == 0 ? 0.0 : 0.9;
      Matrix feats(n, 3);
      for (auto& v : feats.data()) v = rng.normal();
      std::vector<graph::Edge> edges;
      for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, rng.uniform(0.5, 1.5)});
      edges.push_back({0, 3, rng.uniform(0.5, 1.5)});
      const graph::WeightedGraph g(n, std::move(edges), std::move(feats));
      objective::Model m = objective::build_model(mc, 3, rng);

      auto losses = [&]() {
        ad::Tape tape;
        const model::Bound bound(tape, m.store);
        const auto obj = objective::record_objective(m, bound, g, lc, std::nullopt);
        return std::array<double, 3>{obj.cse.value(), obj.con.value(), obj.cen.value()};
      };
      std::array<std::vector<double>, 3> analytic;
      {
        ad::Tape tape;
        const model::Bound bound(tape, m.store);
        const auto obj = objective::record_objective(m, bound, g, lc, std::nullopt);
        const ad::Var terms[3] = {obj.cse, obj.con, obj.cen};
        for (int t = 0; t < 3; ++t) {
          for (const auto& grad : bound.gradients(tape.backward(terms[t]))) {
            analytic[t].insert(analytic[t].end(), grad.begin(), grad.end());
          }
        }
      }
      std::array<std::vector<double>, 3> numeric;
      for (std::size_t p = 0; p < m.store.size(); ++p) {
        for (double& v : m.store[p].values) {
          const double saved = v;
          v = saved + h;
          const auto plus = losses();
          v = saved - h;
          const auto minus = losses();
          v = saved;
          for (int t = 0; t < 3; ++t) numeric[t].push_back((plus[t] - minus[t]) / (2.0 * h));
        }
      }
      for (int t = 0; t < 3; ++t) {
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < analytic[t].size(); ++i) {
          diff += (analytic[t][i] - numeric[t][i]) * (analytic[t][i] - numeric[t][i]);
          na += analytic[t][i] * analytic[t][i];
          nn += numeric[t][i] * numeric[t][i];
        }
        const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
        worst[t] = std::max(worst[t], std::isfinite(rel) ? rel : 1e300);
      }
      ++r.cases;
    }
    r.worst = std::max({worst[0], worst[1], worst[2]});
    r.passed = r.worst < 1e-3;
    r.detail = std::to_string(r.cases) + " draws, max relative error cse " + fmt(worst[0]) +
               ", con " + fmt(worst[1]) + ", cen " + fmt(worst[2]);
  });
}

CheckResult decode_equivalence(std::uint64_t seed) {
  return timed("decode_equivalence", [&](CheckResult& r) {
    Rng rng(seed);
    r.passed = true;
    int mismatches = 0;
    for (int k = 0; k < 50; ++k) {
      const int n = 3 + static_cast<int>(rng.index(62));
      const std::size_t dim = k % 2 == 0 ? 2 : 3;
      std::vector<geometry::PoincareVec> z;
      for (int i = 0; i < n; ++i) z.push_back({random_ball_point(rng, dim, 0.95)});
      const auto naive = tree::PartitionTree::from_dendrogram(decode::decode_tree_naive(z));
      const auto fast = tree::PartitionTree::from_dendrogram(decode::decode_tree_fast(z, n - 1));
      ++r.cases;
      if (tree::cluster_signature(naive) != tree::cluster_signature(fast)) ++mismatches;
    }
    r.passed = mismatches == 0;
    r.detail = std::to_string(r.cases) + " embeddings, " + std::to_string(mismatches) + " mismatches";
  });
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {"lca_form", "binary_min", "conductance_bound", "origin_distance",
                                                 "gradcheck", "hardlimit", "decode"};
  return names;
}

CheckResult run_check(std::string_view name) {
  if (name == "lca_form") return lca_form();
  if (name == "binary_min") return binary_min();
  if (name == "conductance_bound") return conductance_bound();
  if (name == "origin_distance") return origin_distance();
  if (name == "gradcheck") return gradcheck();
  if (name == "hardlimit") return hard_limit();
  if (name == "decode") return decode_equivalence();
  throw UsageError("unknown check '" + std::string(name) + "'");
}

}  // namespace hypcse::checks
