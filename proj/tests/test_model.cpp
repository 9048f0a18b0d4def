#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hypcse/checks.hpp"
#include "hypcse/errors.hpp"
#include "hypcse/geometry.hpp"
#include "hypcse/model.hpp"
#include "hypcse/optimizer.hpp"

using namespace hypcse;
using namespace hypcse::model;

namespace {

double manifold_error(const ad::VarVec& x) {
  double inner = -x[0].value() * x[0].value();
  for (std::size_t c = 1; c < x.size(); ++c) inner += x[c].value() * x[c].value();
  return std::abs(inner + 1.0) / (x[0].value() * x[0].value());
}

std::vector<double> lifted(std::initializer_list<double> v) {
  std::vector<double> s(v);
  return lift(std::span<const double>(s));
}

Matrix random_features(Rng& rng, std::size_t n, std::size_t f) {
  Matrix x(n, f);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("Lorentz linear layer") {
  Rng rng(71);
  ParamStore store;
  LorentzLinear l = LorentzLinear::create(store, "l", 3, 2, false, rng);
  std::fill(store[l.weight].values.begin(), store[l.weight].values.end(), 0.0);

  {
    ad::Tape tape;
    Bound p(tape, store);
    std::vector<double> x = lifted({0.4, -0.3});
    ad::VarVec y = l.forward(p, std::span<const double>(x));
    CHECK(y[0].value() == 1.0);
    CHECK(y[1].value() == 0.0);
  }
  store[l.bias].values = {1.0, 0.0};
  {
    ad::Tape tape;
    Bound p(tape, store);
    std::vector<double> x = lifted({0.4, -0.3});
    CHECK(l.forward(p, std::span<const double>(x))[0].value() == doctest::Approx(std::sqrt(2.0)));
  }

  ParamStore big;
  LorentzLinear h = LorentzLinear::create(big, "h", 5, 7, true, rng);
  for (int t = 0; t < 50; ++t) {
    for (double& w : big[h.weight].values) w = 3.0 * rng.normal();
    ad::Tape tape;
    Bound p(tape, big);
    std::vector<double> x = lifted({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    CHECK(manifold_error(h.forward(p, std::span<const double>(x))) < 1e-9);
  }
}

TEST_CASE("bounded Lorentz linear layer") {
  Rng rng(72);
  ParamStore store;
  LorentzLinear l = LorentzLinear::create(store, "l", 3, 2, false, rng);
  l.max_norm = 2.0;
  store[l.bias].values = {40.0, -25.0};
  ad::Tape tape;
  Bound p(tape, store);
  std::vector<double> x = lifted({0.1, 0.2});
  ad::VarVec y = l.forward(p, std::span<const double>(x));
  const double spatial = std::hypot(y[1].value(), y[2].value());
  CHECK(spatial <= 2.0 + 1e-12);
  CHECK(spatial > 1.99);
  CHECK(manifold_error(y) < 1e-12);

  for (double sq : {0.0, 1e-9, 0.3, 4.0, 90.0}) {
    ad::Tape t2;
    ad::Var v = t2.variable(sq);
    ad::Var f = soft_clip_factor(v, 2.0);
    const double r = std::sqrt(sq);
    CHECK(f.value() == doctest::Approx(r > 0 ? 2.0 * std::tanh(r / 2.0) / r : 1.0).epsilon(1e-12));
    const double h = 1e-6;
    auto value_at = [](double s) {
      ad::Tape t3;
      return soft_clip_factor(t3.variable(s), 2.0).value();
    };
    const double fd = (value_at(sq + h) - value_at(std::max(0.0, sq - h))) / (sq >= h ? 2 * h : h + sq);
    CHECK(t2.backward(f)[v.index()] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("attention aggregation fixtures") {
  ad::Tape tape;
  Points pts;
  for (auto s : {std::vector<double>{0.3, 0.1}, {-0.5, 0.9}, {1.2, -0.4}}) {
    pts.push_back(tape.variables(lift(std::span<const double>(s))));
  }

  AttentionGraph self;
  self.neighbors = {{0}, {1}, {2}};
  Points same = lorentz_aggregate(pts, pts, pts, self);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(same[i][c].value() == doctest::Approx(pts[i][c].value()));
  }

  AttentionGraph all;
  all.neighbors = {{0, 1, 2}, {1, 0, 2}, {2, 0, 1}};
  Points keys(3, pts[0]);
  std::vector<std::vector<double>> weights;
  lorentz_aggregate(pts, keys, pts, all, &weights);
  for (const auto& w : weights) {
    for (double v : w) CHECK(v == doctest::Approx(1.0 / 3.0));
  }

  lorentz_aggregate(pts, pts, pts, all, &weights);
  for (const auto& w : weights) {
    double s = 0.0;
    for (double v : w) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("attention aggregation matches a direct evaluation") {
  // Path 0-1-2 with fixed points; plain double arithmetic as the reference.
  std::vector<std::vector<double>> q, k, v;
  for (auto s : {std::vector<double>{0.2, -0.1}, {0.5, 0.4}, {-0.3, 0.8}}) q.push_back(lift(std::span<const double>(s)));
  for (auto s : {std::vector<double>{0.1, 0.1}, {-0.6, 0.2}, {0.9, -0.2}}) k.push_back(lift(std::span<const double>(s)));
  for (auto s : {std::vector<double>{1.0, 0.0}, {0.0, -0.7}, {0.4, 0.4}}) v.push_back(lift(std::span<const double>(s)));
  std::vector<std::vector<int>> nb{{0, 1}, {1, 0, 2}, {2, 1}};

  ad::Tape tape;
  Points qv, kv, vv;
  for (int i = 0; i < 3; ++i) {
    qv.push_back(tape.variables(q[i]));
    kv.push_back(tape.variables(k[i]));
    vv.push_back(tape.variables(v[i]));
  }
  AttentionGraph g;
  g.neighbors = nb;
  Points out = lorentz_aggregate(qv, kv, vv, g);

  for (int i = 0; i < 3; ++i) {
    std::vector<double> logits;
    for (int j : nb[i]) {
      const double inner = -q[i][0] * k[j][0] + q[i][1] * k[j][1] + q[i][2] * k[j][2];
      const double d = std::acosh(std::max(1.0, -inner));
      logits.push_back(-d * d / std::sqrt(2.0));
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l);
    std::vector<double> s(3, 0.0);
    for (std::size_t t = 0; t < nb[i].size(); ++t) {
      for (int c = 0; c < 3; ++c) s[c] += std::exp(logits[t]) / z * v[nb[i][t]][c];
    }
    const double norm = std::sqrt(std::abs(-s[0] * s[0] + s[1] * s[1] + s[2] * s[2]));
    for (int c = 0; c < 3; ++c) CHECK(out[i][c].value() == doctest::Approx(s[c] / norm).epsilon(1e-9));
    CHECK(manifold_error(out[i]) < 1e-9);
  }
}

TEST_CASE("encoder and projector") {
  Rng rng(73);
  graph::WeightedGraph g = checks::random_graph(7, rng, 0.4);
  Matrix x = random_features(rng, 7, 3);
  ParamStore store;
  Encoder enc = Encoder::create(store, 3, 5, 4, rng);
  Projector proj = Projector::create(store, 4, 5, rng);
  AttentionGraph att = AttentionGraph::from_graph(g);

  auto run = [&](const Matrix& feats, const AttentionGraph& a) {
    ad::Tape tape;
    Bound p(tape, store);
    Points z = enc.forward(p, feats, a);
    Points h = proj.forward(p, z);
    return std::make_pair(values_of(z), values_of(h));
  };
  auto [z, h] = run(x, att);
  REQUIRE(z.rows() == 7);
  CHECK(z.cols() == 5);
  CHECK(h.cols() == 5);
  for (std::size_t i = 0; i < 7; ++i) {
    for (const Matrix* m : {&z, &h}) {
      geometry::LorentzVec pnt{std::vector<double>(m->row(i).begin(), m->row(i).end())};
      CHECK(geometry::on_manifold(pnt, -1.0, 1e-6));
    }
  }
  CHECK(run(x, att).first == z);

  std::vector<int> perm{4, 0, 6, 2, 1, 5, 3};
  std::vector<graph::Edge> edges;
  for (const graph::Edge& e : g.edges()) edges.push_back({perm[e.u], perm[e.v], e.weight});
  graph::WeightedGraph gp(7, edges);
  Matrix xp(7, 3);
  for (int i = 0; i < 7; ++i) {
    for (int c = 0; c < 3; ++c) xp(perm[i], c) = x(i, c);
  }
  auto [zp, hp] = run(xp, AttentionGraph::from_graph(gp));
  for (int i = 0; i < 7; ++i) {
    for (std::size_t c = 0; c < z.cols(); ++c) {
      CHECK(zp(perm[i], c) == doctest::Approx(z(i, c)).epsilon(1e-10));
      CHECK(hp(perm[i], c) == doctest::Approx(h(i, c)).epsilon(1e-10));
    }
  }
}

TEST_CASE("graph learner") {
  Rng rng(74);
  Matrix x = random_features(rng, 5, 3);
  ParamStore store;
  GraphLearner mlp = GraphLearner::create(store, LearnerKind::Mlp, 3, 3, rng);
  mlp.activation = false;
  store[mlp.w1].values = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  store[mlp.w2].values = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  graph::WeightedGraph empty(5, {});
  ad::Tape tape;
  Bound p(tape, store);
  Matrix out = values_of(mlp.forward(p, x, empty));
  for (std::size_t i = 0; i < 5; ++i) {
    const double norm = std::sqrt(x(i, 0) * x(i, 0) + x(i, 1) * x(i, 1) + x(i, 2) * x(i, 2));
    for (std::size_t c = 0; c < 3; ++c) CHECK(out(i, c) == doctest::Approx(x(i, c) / norm));
  }

  ParamStore s2;
  Rng r2(75);
  GraphLearner gcn = GraphLearner::create(s2, LearnerKind::Gcn, 3, 4, r2);
  GraphLearner as_mlp = gcn;
  as_mlp.kind = LearnerKind::Mlp;
  ad::Tape t2;
  Bound p2(t2, s2);
  CHECK(values_of(gcn.forward(p2, x, empty)) == values_of(as_mlp.forward(p2, x, empty)));
}

TEST_CASE("graph learner gradient") {
  Rng rng(76);
  graph::WeightedGraph g = checks::random_graph(5, rng, 0.6);
  Matrix x = random_features(rng, 5, 3);
  ParamStore store;
  GraphLearner gcn = GraphLearner::create(store, LearnerKind::Gcn, 3, 4, rng);
  std::vector<double> mix{0.3, -1.2, 0.8, 0.5};

  auto loss_of = [&](Bound& p) {
    Points h = gcn.forward(p, x, g);
    ad::VarVec terms;
    for (std::size_t i = 0; i < h.size(); ++i) terms.push_back(ad::dot(mix, h[i]) * (1.0 + i));
    return ad::sum(terms);
  };
  ad::Tape tape;
  Bound p(tape, store);
  std::vector<std::vector<double>> grads = p.gradients(tape.backward(loss_of(p)));

  double err_sq = 0.0, ref_sq = 0.0;
  for (std::size_t k = 0; k < store.size(); ++k) {
    for (std::size_t i = 0; i < store[k].values.size(); ++i) {
      const double keep = store[k].values[i];
      double val[2];
      for (int s = 0; s < 2; ++s) {
        store[k].values[i] = keep + (s == 0 ? 1e-5 : -1e-5);
        ad::Tape t;
        Bound b(t, store);
        val[s] = loss_of(b).value();
      }
      store[k].values[i] = keep;
      const double fd = (val[0] - val[1]) / 2e-5;
      err_sq += (fd - grads[k][i]) * (fd - grads[k][i]);
      ref_sq += fd * fd;
    }
  }
  CHECK(std::sqrt(err_sq / ref_sq) < 1e-4);
}

TEST_CASE("full objective gradient") {
  checks::CheckResult r = checks::gradcheck(6, 2);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(77);
  ParamStore store;
  Encoder::create(store, 3, 4, 2, rng);
  store.add("point", 2, 3, {1, 0, 0, std::sqrt(2.0), 1, 0}, ParamKind::Lorentz);
  graph::WeightedGraph g = checks::random_graph(6, rng);
  std::ostringstream out;
  write_checkpoint(out, store, g);
  std::istringstream in(out.str());
  Checkpoint back = read_checkpoint(in);
  REQUIRE(back.store.size() == store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    CHECK(back.store[i].name == store[i].name);
    CHECK(back.store[i].kind == store[i].kind);
    CHECK(back.store[i].values == store[i].values);
  }
  CHECK(back.anchor.edges() == g.edges());

  std::istringstream broken("hypcse-checkpoint 1\nparam x euclidean 2 2\n1 2\n");
  CHECK_THROWS_AS(read_checkpoint(broken), DataError);
  std::istringstream wrong("not a checkpoint\n");
  CHECK_THROWS_AS(read_checkpoint(wrong), DataError);
}

TEST_CASE("optimizer") {
  ParamStore store;
  std::size_t e = store.add("e", 1, 2, {3.0, -2.0});
  std::size_t l = store.add("l", 1, 3, {std::sqrt(2.0), 1.0, 0.0}, ParamKind::Lorentz);

  SUBCASE("zero gradient leaves parameters unchanged") {
    RiemannianAdam opt(store, {e, l}, {0.1});
    const auto before_e = store[e].values;
    const auto before_l = store[l].values;
    opt.step(store, {{0.0, 0.0}, {0.0, 0.0, 0.0}});
    CHECK(store[e].values == before_e);
    CHECK(store[l].values == before_l);
  }
  SUBCASE("quadratic converges") {
    RiemannianAdam opt(store, {e}, {0.1});
    for (int t = 0; t < 500; ++t) {
      const auto& w = store[e].values;
      opt.step(store, {{2.0 * (w[0] - 1.5), 2.0 * (w[1] + 0.5)}, {}});
    }
    CHECK(store[e].values[0] == doctest::Approx(1.5).epsilon(1e-4).scale(1.0));
    CHECK(store[e].values[1] == doctest::Approx(-0.5).epsilon(1e-4).scale(1.0));
  }
  SUBCASE("manifold parameters stay on the hyperboloid") {
    RiemannianAdam opt(store, {l}, {0.05});
    Rng rng(78);
    for (int t = 0; t < 100; ++t) {
      opt.step(store, {{}, {rng.normal(), rng.normal(), rng.normal()}});
      geometry::LorentzVec x{store[l].values};
      REQUIRE(geometry::on_manifold(x, -1.0, 1e-6));
    }
    CHECK(opt.steps() == 100u);
  }
  SUBCASE("Riemannian steps descend a hyperbolic distance") {
    RiemannianAdam opt(store, {l}, {0.05});
    geometry::LorentzVec target{{std::cosh(1.0), 0.0, std::sinh(1.0)}};
    const double start = geometry::lorentz_distance(geometry::LorentzVec{store[l].values}, target);
    for (int t = 0; t < 200; ++t) {
      ad::Tape tape;
      ad::VarVec x = tape.variables(store[l].values);
      ad::VarVec y = tape.variables(target.coords);
      ad::Var d = ad::lorentz_sq_distance(x, y);
      std::vector<double> adj = tape.backward(d);
      opt.step(store, {{}, {adj[x[0].index()], adj[x[1].index()], adj[x[2].index()]}});
    }
    CHECK(geometry::lorentz_distance(geometry::LorentzVec{store[l].values}, target) < 0.05 * start);
  }
  SUBCASE("non-finite gradient names the parameter") {
    RiemannianAdam opt(store, {e, l}, {0.1});
    const auto before = store[e].values;
    try {
      opt.step(store, {{std::numeric_limits<double>::quiet_NaN(), 0.0}, {0.0, 0.0, 0.0}});
      FAIL("expected NumericError");
    } catch (const NumericError& err) {
      CHECK(std::string(err.what()) == "non-finite gradient in parameter e");
    }
    CHECK(store[e].values == before);
  }
}
