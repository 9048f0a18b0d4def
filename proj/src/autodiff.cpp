#include "hypcse/autodiff.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hypcse::ad {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

Tape& tape_of(Var a) {
  assert(a.valid());
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  assert(a.valid() && a.tape() == b.tape());
  return *a.tape();
}

Tape& tape_of(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("fused op on an empty vector");
  return *xs.front().tape();
}

}  // namespace

Var Tape::variable(double value) { return record(value, {}, {}); }

VarVec Tape::variables(std::span<const double> vals) {
  VarVec out;
  out.reserve(vals.size());
  for (double v : vals) out.push_back(variable(v));
  return out;
}

Var Tape::record(double value, std::span<const int> parents, std::span<const double> partials) {
  assert(parents.size() == partials.size());
  values_.push_back(value);
  parents_.insert(parents_.end(), parents.begin(), parents.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  offsets_.push_back(static_cast<std::uint32_t>(parents_.size()));
  return Var(this, static_cast<int>(values_.size()) - 1);
}

Var Tape::unary(double value, Var a, double da) {
  const int p[1] = {a.index()};
  const double d[1] = {da};
  return record(value, p, d);
}

Var Tape::binary(double value, Var a, double da, Var b, double db) {
  const int p[2] = {a.index(), b.index()};
  const double d[2] = {da, db};
  return record(value, p, d);
}

std::vector<double> Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss is not on this tape");
  std::vector<double> adj(values_.size(), 0.0);
  adj[loss.index()] = 1.0;
  last_visits_ = 0;
  for (int i = loss.index(); i >= 0; --i) {
    ++last_visits_;
    const double g = adj[i];
    if (g == 0.0) continue;
    for (std::uint32_t e = offsets_[i]; e < offsets_[i + 1]; ++e) adj[parents_[e]] += g * partials_[e];
  }
  return adj;
}

std::vector<double> Tape::backward(std::span<const Var> loss) {
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  return backward(loss.front());
}

void Tape::clear() {
  values_.clear();
  offsets_.assign(1, 0);
  parents_.clear();
  partials_.clear();
}

void Tape::reserve(std::size_t nodes, std::size_t partials) {
  values_.reserve(nodes);
  offsets_.reserve(nodes + 1);
  parents_.reserve(partials);
  partials_.reserve(partials);
}

Var operator+(Var a, Var b) { return tape_of(a, b).binary(a.value() + b.value(), a, 1.0, b, 1.0); }
Var operator-(Var a, Var b) { return tape_of(a, b).binary(a.value() - b.value(), a, 1.0, b, -1.0); }
Var operator*(Var a, Var b) {
  return tape_of(a, b).binary(a.value() * b.value(), a, b.value(), b, a.value());
}
Var operator/(Var a, Var b) {
  const double inv = 1.0 / b.value();
  return tape_of(a, b).binary(a.value() * inv, a, inv, b, -a.value() * inv * inv);
}
Var operator-(Var a) { return tape_of(a).unary(-a.value(), a, -1.0); }
Var operator+(Var a, double b) { return tape_of(a).unary(a.value() + b, a, 1.0); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, double b) { return tape_of(a).unary(a.value() - b, a, 1.0); }
Var operator-(double a, Var b) { return tape_of(b).unary(a - b.value(), b, -1.0); }
Var operator*(Var a, double b) { return tape_of(a).unary(a.value() * b, a, b); }
Var operator*(double a, Var b) { return b * a; }
Var operator/(Var a, double b) { return tape_of(a).unary(a.value() / b, a, 1.0 / b); }
Var operator/(double a, Var b) {
  const double inv = 1.0 / b.value();
  return tape_of(b).unary(a * inv, b, -a * inv * inv);
}

Var exp(Var a) {
  const double e = std::exp(a.value());
  return tape_of(a).unary(e, a, e);
}
Var log(Var a) { return tape_of(a).unary(std::log(a.value()), a, 1.0 / a.value()); }
Var log2(Var a) { return tape_of(a).unary(std::log2(a.value()), a, 1.0 / (a.value() * kLn2)); }
Var sqrt(Var a) {
  const double s = std::sqrt(a.value());
  return tape_of(a).unary(s, a, 0.5 / s);
}
Var square(Var a) { return tape_of(a).unary(a.value() * a.value(), a, 2.0 * a.value()); }
Var cosh(Var a) { return tape_of(a).unary(std::cosh(a.value()), a, std::sinh(a.value())); }
Var sinh(Var a) { return tape_of(a).unary(std::sinh(a.value()), a, std::cosh(a.value())); }

Var acosh(Var a) {
  const double z = std::max(1.0, a.value());
  const double d = 1.0 / std::sqrt(std::max(z * z - 1.0, 1e-12));
  return tape_of(a).unary(std::acosh(z), a, a.value() < 1.0 ? 0.0 : d);
}

Var atanh(Var a) {
  const double lim = 1.0 - 1e-12;
  const double z = std::clamp(a.value(), -lim, lim);
  const bool clamped = z != a.value();
  return tape_of(a).unary(std::atanh(z), a, clamped ? 0.0 : 1.0 / (1.0 - z * z));
}

Var acosh_sq(Var a) {
  const double z = std::max(1.0, a.value());
  const double u = z - 1.0;
  double value;
  double deriv;
  if (u < 1e-8) {
    // arcosh(1+u)^2 = 2u - u^2/3 + O(u^3)
    value = 2.0 * u - u * u / 3.0;
    deriv = 2.0 - 2.0 * u / 3.0;
  } else {
    const double ac = std::acosh(z);
    value = ac * ac;
    deriv = 2.0 * ac / std::sqrt(z * z - 1.0);
  }
  return tape_of(a).unary(value, a, a.value() < 1.0 ? 0.0 : deriv);
}

Var leaky_relu(Var a, double slope) {
  const double v = a.value();
  return tape_of(a).unary(v >= 0.0 ? v : slope * v, a, v >= 0.0 ? 1.0 : slope);
}

Var clamp_min(Var a, double lo) {
  const double v = a.value();
  return tape_of(a).unary(v >= lo ? v : lo, a, v >= lo ? 1.0 : 0.0);
}

Var abs(Var a) {
  const double v = a.value();
  return tape_of(a).unary(std::abs(v), a, v >= 0.0 ? 1.0 : -1.0);
}

namespace {

// Scratch buffers reused by fused kernels.
thread_local std::vector<int> g_parents;
thread_local std::vector<double> g_partials;

}  // namespace

Var sum(std::span<const Var> xs) {
  Tape& t = tape_of(xs);
  g_parents.clear();
  g_partials.clear();
  double s = 0.0;
  for (Var x : xs) {
    s += x.value();
    g_parents.push_back(x.index());
    g_partials.push_back(1.0);
  }
  return t.record(s, g_parents, g_partials);
}

Var dot(std::span<const Var> x, std::span<const Var> y) {
  assert(x.size() == y.size());
  Tape& t = tape_of(x);
  g_parents.clear();
  g_partials.clear();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xv = x[i].value();
    const double yv = y[i].value();
    s += xv * yv;
    g_parents.push_back(x[i].index());
    g_partials.push_back(yv);
    g_parents.push_back(y[i].index());
    g_partials.push_back(xv);
  }
  return t.record(s, g_parents, g_partials);
}

Var dot(std::span<const double> w, std::span<const Var> x) {
  assert(w.size() == x.size());
  Tape& t = tape_of(x);
  g_parents.clear();
  g_partials.clear();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * x[i].value();
    g_parents.push_back(x[i].index());
    g_partials.push_back(w[i]);
  }
  return t.record(s, g_parents, g_partials);
}

Var lorentz_inner(std::span<const Var> x, std::span<const Var> y) {
  assert(x.size() == y.size() && !x.empty());
  Tape& t = tape_of(x);
  g_parents.clear();
  g_partials.clear();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sign = i == 0 ? -1.0 : 1.0;
    const double xv = x[i].value();
    const double yv = y[i].value();
    s += sign * xv * yv;
    g_parents.push_back(x[i].index());
    g_partials.push_back(sign * yv);
    g_parents.push_back(y[i].index());
    g_partials.push_back(sign * xv);
  }
  return t.record(s, g_parents, g_partials);
}

namespace {

// Shared body of the two distance kernels; `squared` selects d^2.
Var lorentz_distance_impl(std::span<const Var> x, std::span<const Var> y, bool squared) {
  assert(x.size() == y.size() && !x.empty());
  Tape& t = tape_of(x);
  const std::size_t n = x.size();
  std::vector<double> diff(n);
  double m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = x[i].value() - y[i].value();
    m2 += (i == 0 ? -1.0 : 1.0) * diff[i] * diff[i];
  }
  m2 = std::max(m2, 0.0);
  const double m = std::sqrt(m2);
  const double d = 2.0 * std::asinh(0.5 * m);
  // d d / d m = 1 / sqrt(1 + m^2 / 4); d m / d x_i = sign_i diff_i / m.
  const double dd_dm = 1.0 / std::sqrt(1.0 + 0.25 * m2);
  double scale;  // multiplies sign_i diff_i
  if (squared) {
    const double d_over_m = m < 1e-8 ? 1.0 : d / m;
    scale = 2.0 * d_over_m * dd_dm;
  } else {
    scale = m < 1e-15 ? 0.0 : dd_dm / m;
  }
  g_parents.clear();
  g_partials.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = (i == 0 ? -1.0 : 1.0) * diff[i] * scale;
    g_parents.push_back(x[i].index());
    g_partials.push_back(g);
    g_parents.push_back(y[i].index());
    g_partials.push_back(-g);
  }
  return t.record(squared ? d * d : d, g_parents, g_partials);
}

}  // namespace

Var lorentz_distance(std::span<const Var> x, std::span<const Var> y) {
  return lorentz_distance_impl(x, y, false);
}

Var lorentz_sq_distance(std::span<const Var> x, std::span<const Var> y) {
  return lorentz_distance_impl(x, y, true);
}

Var weighted_sum(std::span<const Var> w, std::span<const Var> x) { return dot(w, x); }

VarVec softmax(std::span<const Var> logits) {
  Tape& t = tape_of(logits);
  const std::size_t n = logits.size();
  double mx = -std::numeric_limits<double>::infinity();
  for (Var l : logits) mx = std::max(mx, l.value());
  std::vector<double> p(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(logits[i].value() - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  VarVec out;
  out.reserve(n);
  std::vector<int> parents(n);
  std::vector<double> partials(n);
  for (std::size_t j = 0; j < n; ++j) parents[j] = logits[j].index();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) partials[j] = (i == j ? p[i] : 0.0) - p[i] * p[j];
    out.push_back(t.record(p[i], parents, partials));
  }
  return out;
}

Var log_softmax_at(std::span<const Var> logits, std::size_t index) {
  Tape& t = tape_of(logits);
  double mx = -std::numeric_limits<double>::infinity();
  for (Var l : logits) mx = std::max(mx, l.value());
  double z = 0.0;
  for (Var l : logits) z += std::exp(l.value() - mx);
  const double lse = mx + std::log(z);
  g_parents.clear();
  g_partials.clear();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    g_parents.push_back(logits[j].index());
    const double p = std::exp(logits[j].value() - lse);
    g_partials.push_back((j == index ? 1.0 : 0.0) - p);
  }
  return t.record(logits[index].value() - lse, g_parents, g_partials);
}

std::vector<double> values(std::span<const Var> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (Var x : xs) out.push_back(x.value());
  return out;
}

}  // namespace hypcse::ad
