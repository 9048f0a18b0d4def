#include "hypcse/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hypcse/errors.hpp"

namespace hypcse::model {

std::size_t ParamStore::add(std::string name, std::size_t rows, std::size_t cols,
                            std::vector<double> values, ParamKind kind) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  if (values.size() != rows * cols) throw std::invalid_argument("parameter size mismatch: " + name);
  params_.push_back({std::move(name), rows, cols, std::move(values), kind});
  return params_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamStore::total_values() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.values.size();
  return total;
}

Bound::Bound(ad::Tape& tape, const ParamStore& store) : tape_(&tape) {
  vars_.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) vars_.push_back(tape.variables(store[i].values));
}

std::vector<std::vector<double>> Bound::gradients(const std::vector<double>& adjoints) const {
  std::vector<std::vector<double>> out;
  out.reserve(vars_.size());
  for (const auto& vs : vars_) {
    std::vector<double> g(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) g[i] = adjoints[static_cast<std::size_t>(vs[i].index())];
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<double> uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

LorentzLinear LorentzLinear::create(ParamStore& store, const std::string& name,
                                    std::size_t in_coords, std::size_t out_dim, bool hidden,
                                    Rng& rng) {
  LorentzLinear l;
  l.in_coords = in_coords;
  l.out_dim = out_dim;
  l.hidden = hidden;
  l.weight = store.add(name + ".weight", out_dim, in_coords, uniform_init(out_dim, in_coords, rng));
  l.bias = store.add(name + ".bias", 1, out_dim, std::vector<double>(out_dim, 0.0));
  return l;
}

namespace {

template <class Input>
ad::VarVec linear_forward(const LorentzLinear& l, const Bound& p, Input x) {
  if (x.size() != l.in_coords) throw std::invalid_argument("LorentzLinear: input size mismatch");
  const auto w = p[l.weight];
  const auto b = p[l.bias];
  ad::VarVec v;
  v.reserve(l.out_dim);
  for (std::size_t r = 0; r < l.out_dim; ++r) {
    ad::Var a = ad::dot(x, w.subspan(r * l.in_coords, l.in_coords));
    if (l.hidden) a = ad::leaky_relu(a, LorentzLinear::kLeakySlope);
    v.push_back(a + b[r]);
  }
  if (l.max_norm > 0.0) {
    const ad::Var f = soft_clip_factor(ad::dot(v, v), l.max_norm);
    for (auto& c : v) c = c * f;
  }
  return lift(v);
}

}  // namespace

ad::VarVec LorentzLinear::forward(const Bound& p, std::span<const ad::Var> x) const {
  return linear_forward(*this, p, x);
}

ad::VarVec LorentzLinear::forward(const Bound& p, std::span<const double> x) const {
  return linear_forward(*this, p, x);
}

ad::Var soft_clip_factor(ad::Var sq, double max_norm) {
  const double x = sq.value() / (max_norm * max_norm);
  double f = 0.0;
  double df = 0.0;  // d f / d x
  if (x < 1e-6) {
    f = 1.0 - x / 3.0 + 2.0 * x * x / 15.0;
    df = -1.0 / 3.0 + 4.0 * x / 15.0;
  } else {
    const double s = std::sqrt(x);
    const double t = std::tanh(s);
    f = t / s;
    df = ((1.0 - t * t) / s - t / x) / (2.0 * s);
  }
  return sq.tape()->unary(f, sq, df / (max_norm * max_norm));
}

ad::VarVec lift(std::span<const ad::Var> v) {
  ad::VarVec out;
  out.reserve(v.size() + 1);
  out.push_back(ad::sqrt(ad::dot(v, v) + 1.0));
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::vector<double> lift(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  std::vector<double> out;
  out.reserve(v.size() + 1);
  out.push_back(std::sqrt(sq + 1.0));
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

AttentionGraph AttentionGraph::from_graph(const graph::WeightedGraph& g) {
  AttentionGraph a;
  a.neighbors.resize(static_cast<std::size_t>(g.num_vertices()));
  for (int i = 0; i < g.num_vertices(); ++i) {
    auto& nb = a.neighbors[i];
    nb.push_back(i);
    for (const auto& e : g.neighbors(i)) nb.push_back(e.vertex);
  }
  return a;
}

Points lorentz_aggregate(const Points& q, const Points& k, const Points& v, const AttentionGraph& g,
                         std::vector<std::vector<double>>* weights_out) {
  const std::size_t n = q.size();
  if (k.size() != n || v.size() != n || g.neighbors.size() != n) {
    throw std::invalid_argument("lorentz_aggregate: size mismatch");
  }
  const bool weighted = !g.log_weights.empty();
  if (weights_out) weights_out->assign(n, {});
  Points out;
  out.reserve(n);
  ad::VarVec logits;
  ad::VarVec column;
  ad::VarVec s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = g.neighbors[i];
    if (nb.empty()) throw std::invalid_argument("lorentz_aggregate: empty neighborhood");
    const double scale = 1.0 / std::sqrt(static_cast<double>(q[i].size() - 1));
    logits.clear();
    for (std::size_t t = 0; t < nb.size(); ++t) {
      ad::Var l = ad::lorentz_sq_distance(q[i], k[static_cast<std::size_t>(nb[t])]) * (-scale);
      if (weighted) l = l + g.log_weights[i][t];
      logits.push_back(l);
    }
    const ad::VarVec w = ad::softmax(logits);
    if (weights_out) (*weights_out)[i] = ad::values(w);
    const std::size_t coords = v[static_cast<std::size_t>(nb[0])].size();
    s.clear();
    column.resize(nb.size());
    for (std::size_t c = 0; c < coords; ++c) {
      for (std::size_t t = 0; t < nb.size(); ++t) column[t] = v[static_cast<std::size_t>(nb[t])][c];
      s.push_back(ad::dot(w, column));
    }
    const ad::Var modulus = ad::sqrt(ad::abs(ad::lorentz_inner(s, s)));
    ad::VarVec o;
    o.reserve(coords);
    for (const ad::Var sc : s) o.push_back(sc / modulus);
    out.push_back(std::move(o));
  }
  return out;
}

LorentzConv LorentzConv::create(ParamStore& store, const std::string& name, std::size_t in_coords,
                                std::size_t out_dim, bool hidden, Rng& rng, double max_norm) {
  LorentzConv c;
  c.linear = LorentzLinear::create(store, name + ".linear", in_coords, out_dim, hidden, rng);
  c.query = LorentzLinear::create(store, name + ".query", out_dim + 1, out_dim, false, rng);
  c.key = LorentzLinear::create(store, name + ".key", out_dim + 1, out_dim, false, rng);
  c.value = LorentzLinear::create(store, name + ".value", out_dim + 1, out_dim, false, rng);
  for (LorentzLinear* l : {&c.linear, &c.query, &c.key, &c.value}) l->max_norm = max_norm;
  return c;
}

Points LorentzConv::attend(const Bound& p, const Points& h, const AttentionGraph& g) const {
  Points q;
  Points k;
  Points v;
  q.reserve(h.size());
  k.reserve(h.size());
  v.reserve(h.size());
  for (const auto& x : h) {
    q.push_back(query.forward(p, std::span<const ad::Var>(x)));
    k.push_back(key.forward(p, std::span<const ad::Var>(x)));
    v.push_back(value.forward(p, std::span<const ad::Var>(x)));
  }
  return lorentz_aggregate(q, k, v, g);
}

Points LorentzConv::forward(const Bound& p, const Points& x, const AttentionGraph& g) const {
  Points h;
  h.reserve(x.size());
  for (const auto& xi : x) h.push_back(linear.forward(p, std::span<const ad::Var>(xi)));
  return attend(p, h, g);
}

Encoder Encoder::create(ParamStore& store, std::size_t in_features, std::size_t hidden,
                        std::size_t embed, Rng& rng, double max_norm) {
  Encoder e;
  e.layers.push_back(
      LorentzConv::create(store, "encoder.0", in_features + 1, hidden, true, rng, max_norm));
  e.layers.push_back(LorentzConv::create(store, "encoder.1", hidden + 1, hidden, true, rng, max_norm));
  e.layers.push_back(LorentzConv::create(store, "encoder.2", hidden + 1, embed, false, rng, max_norm));
  return e;
}

Points Encoder::forward(const Bound& p, const Matrix& features, const AttentionGraph& g) const {
  Points h;
  h.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const std::vector<double> x = lift(features.row(i));
    h.push_back(layers.front().linear.forward(p, std::span<const double>(x)));
  }
  Points z = layers.front().attend(p, h, g);
  for (std::size_t l = 1; l < layers.size(); ++l) z = layers[l].forward(p, z, g);
  return z;
}

Projector Projector::create(ParamStore& store, std::size_t embed, std::size_t hidden, Rng& rng,
                            double max_norm) {
  Projector pr;
  pr.first = LorentzLinear::create(store, "projector.0", embed + 1, hidden, true, rng);
  pr.second = LorentzLinear::create(store, "projector.1", hidden + 1, embed, false, rng);
  pr.first.max_norm = max_norm;
  pr.second.max_norm = max_norm;
  return pr;
}

Points Projector::forward(const Bound& p, const Points& z) const {
  Points out;
  out.reserve(z.size());
  for (const auto& x : z) {
    const ad::VarVec h = first.forward(p, std::span<const ad::Var>(x));
    out.push_back(second.forward(p, std::span<const ad::Var>(h)));
  }
  return out;
}

GraphLearner GraphLearner::create(ParamStore& store, LearnerKind kind, std::size_t in_features,
                                  std::size_t hidden, Rng& rng) {
  GraphLearner gl;
  gl.kind = kind;
  gl.w1 = store.add("learner.w1", hidden, in_features, uniform_init(hidden, in_features, rng));
  gl.b1 = store.add("learner.b1", 1, hidden, std::vector<double>(hidden, 0.0));
  gl.w2 = store.add("learner.w2", hidden, hidden, uniform_init(hidden, hidden, rng));
  gl.b2 = store.add("learner.b2", 1, hidden, std::vector<double>(hidden, 0.0));
  return gl;
}

namespace {

// Symmetric-normalized propagation D^-1/2 (A + I) D^-1/2 as neighbor lists.
struct Propagation {
  std::vector<std::vector<int>> cols;
  std::vector<std::vector<double>> vals;
};

Propagation normalized_propagation(const graph::WeightedGraph& g) {
  const int n = g.num_vertices();
  std::vector<double> deg(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) deg[i] = g.degree(i) + 1.0;
  Propagation a;
  a.cols.resize(static_cast<std::size_t>(n));
  a.vals.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    a.cols[i].push_back(i);
    a.vals[i].push_back(1.0 / deg[i]);
    for (const auto& e : g.neighbors(i)) {
      a.cols[i].push_back(e.vertex);
      a.vals[i].push_back(e.weight / std::sqrt(deg[i] * deg[e.vertex]));
    }
  }
  return a;
}

}  // namespace

Points GraphLearner::forward(const Bound& p, const Matrix& features,
                             const graph::WeightedGraph& g) const {
  const std::size_t n = features.rows();
  const std::size_t f = features.cols();
  const auto w1v = p[w1];
  const auto b1v = p[b1];
  const auto w2v = p[w2];
  const auto b2v = p[b2];
  const std::size_t hidden = b1v.size();
  const std::size_t out_dim = b2v.size();
  const bool gcn = kind == LearnerKind::Gcn;
  if (gcn && g.num_vertices() != static_cast<int>(n)) {
    throw std::invalid_argument("graph learner: graph and features differ in size");
  }

  Matrix x0 = features;
  Propagation prop;
  if (gcn) {
    prop = normalized_propagation(g);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = x0.row(i);
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t t = 0; t < prop.cols[i].size(); ++t) {
        const auto src = features.row(static_cast<std::size_t>(prop.cols[i][t]));
        for (std::size_t c = 0; c < f; ++c) row[c] += prop.vals[i][t] * src[c];
      }
    }
  }

  Points h1(n);
  for (std::size_t i = 0; i < n; ++i) {
    h1[i].reserve(hidden);
    for (std::size_t r = 0; r < hidden; ++r) {
      ad::Var a = ad::dot(x0.row(i), w1v.subspan(r * f, f)) + b1v[r];
      if (activation) a = ad::leaky_relu(a, LorentzLinear::kLeakySlope);
      h1[i].push_back(a);
    }
  }
  if (gcn) {
    Points mixed(n);
    ad::VarVec column;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cols = prop.cols[i];
      column.resize(cols.size());
      for (std::size_t c = 0; c < hidden; ++c) {
        for (std::size_t t = 0; t < cols.size(); ++t) column[t] = h1[static_cast<std::size_t>(cols[t])][c];
        mixed[i].push_back(ad::dot(prop.vals[i], column));
      }
    }
    h1 = std::move(mixed);
  }

  Points out(n);
  for (std::size_t i = 0; i < n; ++i) {
    ad::VarVec e;
    e.reserve(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
      e.push_back(ad::dot(std::span<const ad::Var>(h1[i]), w2v.subspan(r * hidden, hidden)) + b2v[r]);
    }
    const ad::Var norm = ad::sqrt(ad::dot(e, e) + 1e-24);
    out[i].reserve(out_dim);
    for (const ad::Var v : e) out[i].push_back(v / norm);
  }
  return out;
}

Matrix values_of(const Points& points) {
  if (points.empty()) return {};
  Matrix m(points.size(), points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t c = 0; c < points[i].size(); ++c) m(i, c) = points[i][c].value();
  }
  return m;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& store, const graph::WeightedGraph& anchor) {
  out << "hypcse-checkpoint 1\n";
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Parameter& p = store[i];
    out << "param " << p.name << ' ' << (p.kind == ParamKind::Lorentz ? "lorentz" : "euclidean")
        << ' ' << p.rows << ' ' << p.cols << '\n';
    for (std::size_t r = 0; r < p.rows; ++r) {
      for (std::size_t c = 0; c < p.cols; ++c) {
        if (c) out << ' ';
        out << format_double(p.values[r * p.cols + c]);
      }
      out << '\n';
    }
  }
  out << "edges " << anchor.num_vertices() << ' ' << anchor.num_edges() << '\n';
  for (const auto& e : anchor.edges()) out << e.u << ' ' << e.v << ' ' << format_double(e.weight) << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "hypcse-checkpoint" || version != 1) {
    throw DataError("checkpoint: missing 'hypcse-checkpoint 1' header");
  }
  Checkpoint ck;
  std::string tag;
  while (in >> tag) {
    if (tag == "param") {
      std::string name;
      std::string kind;
      std::size_t rows = 0;
      std::size_t cols = 0;
      if (!(in >> name >> kind >> rows >> cols)) throw DataError("checkpoint: bad param header");
      if (kind != "lorentz" && kind != "euclidean") throw DataError("checkpoint: bad kind " + kind);
      std::vector<double> values(rows * cols);
      for (double& v : values) {
        if (!(in >> v)) throw DataError("checkpoint: truncated values for " + name);
      }
      ck.store.add(name, rows, cols, std::move(values),
                   kind == "lorentz" ? ParamKind::Lorentz : ParamKind::Euclidean);
    } else if (tag == "edges") {
      int n = 0;
      std::size_t m = 0;
      if (!(in >> n >> m)) throw DataError("checkpoint: bad edges header");
      std::vector<graph::Edge> edges(m);
      for (auto& e : edges) {
        if (!(in >> e.u >> e.v >> e.weight)) throw DataError("checkpoint: truncated edge list");
      }
      try {
        ck.anchor = graph::WeightedGraph(n, std::move(edges));
      } catch (const std::invalid_argument& err) {
        throw DataError(std::string("checkpoint: ") + err.what());
      }
      return ck;
    } else {
      throw DataError("checkpoint: unexpected token '" + tag + "'");
    }
  }
  throw DataError("checkpoint: missing edge section");
}

}  // namespace hypcse::model
