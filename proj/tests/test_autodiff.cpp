#include <doctest.h>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hypcse/autodiff.hpp"
#include "hypcse/random.hpp"

using namespace hypcse;
using namespace hypcse::ad;

namespace {

// Central difference of f at x along every coordinate.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

using TapedFn = std::function<Var(Tape&, const VarVec&)>;

double taped_value(const TapedFn& fn, const std::vector<double>& x) {
  Tape tape;
  return fn(tape, tape.variables(x)).value();
}

void check_gradient(const TapedFn& fn, const std::vector<double>& x, double tol = 1e-6) {
  Tape tape;
  VarVec v = tape.variables(x);
  Var out = fn(tape, v);
  std::vector<double> adj = tape.backward(out);
  std::vector<double> num =
      numeric_gradient([&](const std::vector<double>& y) { return taped_value(fn, y); }, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(adj[v[i].index()] == doctest::Approx(num[i]).epsilon(tol).scale(1.0));
  }
}

}  // namespace

TEST_CASE("elementary gradients") {
  Tape tape;
  Var x = tape.variable(3.0);
  Var y = x * x;
  CHECK(tape.backward(y)[x.index()] == doctest::Approx(6.0));

  Tape t2;
  Var a = t2.variable(2.0);
  CHECK(t2.backward(log2(a))[a.index()] == doctest::Approx(1.0 / (2.0 * std::log(2.0))));
}

TEST_CASE("fan-out accumulates and unused leaves stay zero") {
  Tape tape;
  Var x = tape.variable(1.5);
  Var unused = tape.variable(4.0);
  Var y = exp(x) * x;
  std::vector<double> adj = tape.backward(y);
  CHECK(adj[unused.index()] == 0.0);
  CHECK(adj[x.index()] == doctest::Approx(std::exp(1.5) * 1.5 + std::exp(1.5)));
  CHECK(tape.last_backward_visits() == tape.size());
}

TEST_CASE("primitive gradients match finite differences") {
  check_gradient([](Tape&, const VarVec& v) { return v[0] / v[1] - v[1] * 3.0 + 2.0 / v[0]; }, {1.3, 0.7});
  check_gradient([](Tape&, const VarVec& v) { return sqrt(v[0]) + log(v[1]) + square(v[0] - v[1]); },
                 {2.1, 0.4});
  check_gradient([](Tape&, const VarVec& v) { return cosh(v[0]) * sinh(v[1]); }, {0.3, -0.8});
  check_gradient([](Tape&, const VarVec& v) { return acosh(v[0]) + atanh(v[1]); }, {1.7, 0.45});
  check_gradient([](Tape&, const VarVec& v) { return acosh_sq(v[0]) * abs(v[1]); }, {1.2, -2.0});
  check_gradient([](Tape&, const VarVec& v) { return leaky_relu(v[0], 0.1) + leaky_relu(v[1], 0.1); },
                 {-0.4, 0.9});
  check_gradient([](Tape&, const VarVec& v) { return clamp_min(v[0], 0.5) + clamp_min(v[1], 0.5); },
                 {0.2, 0.9});
}

TEST_CASE("fused kernels match finite differences") {
  Rng rng(51);
  std::vector<double> x(6);
  for (double& v : x) v = rng.uniform(-1, 1);
  x[0] = 3.0;
  x[3] = 2.5;

  check_gradient([](Tape&, const VarVec& v) { return sum(v) * dot(v, v); }, x);
  check_gradient(
      [](Tape&, const VarVec& v) {
        std::vector<double> w{0.5, -1.0, 2.0, 0.0, 1.0, 3.0};
        return dot(w, v);
      },
      x);
  check_gradient(
      [](Tape&, const VarVec& v) {
        VarVec a(v.begin(), v.begin() + 3), b(v.begin() + 3, v.end());
        return lorentz_inner(a, b) + weighted_sum(a, b);
      },
      x);
  check_gradient(
      [](Tape&, const VarVec& v) {
        VarVec s = softmax(v);
        return s[1] * 2.0 + s[4] - log_softmax_at(v, 2);
      },
      x);
}

TEST_CASE("hyperboloid distance kernel") {
  auto lift = [](double a, double b) { return std::vector<double>{std::sqrt(1 + a * a + b * b), a, b}; };
  std::vector<double> p = lift(0.3, -0.2);
  std::vector<double> q = lift(-1.1, 0.7);
  std::vector<double> both(p);
  both.insert(both.end(), q.begin(), q.end());

  Tape tape;
  VarVec v = tape.variables(both);
  VarVec a(v.begin(), v.begin() + 3), b(v.begin() + 3, v.end());
  const double inner = -p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
  CHECK(lorentz_distance(a, b).value() == doctest::Approx(std::acosh(-inner)).epsilon(1e-12));
  CHECK(lorentz_sq_distance(a, b).value() ==
        doctest::Approx(std::acosh(-inner) * std::acosh(-inner)).epsilon(1e-12));

  check_gradient(
      [](Tape&, const VarVec& w) {
        VarVec a2(w.begin(), w.begin() + 3), b2(w.begin() + 3, w.end());
        return lorentz_distance(a2, b2);
      },
      both);

  Tape same;
  VarVec s = same.variables(p);
  VarVec s2 = same.variables(p);
  Var d = lorentz_distance(s, s2);
  CHECK(d.value() == doctest::Approx(0.0).scale(1.0));
  for (double g : same.backward(d)) CHECK(std::isfinite(g));
}

TEST_CASE("backward rejects foreign or vector losses") {
  Tape a;
  Tape b;
  Var x = a.variable(1.0);
  CHECK_THROWS_AS(b.backward(x), std::invalid_argument);
  VarVec two{a.variable(1.0), a.variable(2.0)};
  CHECK_THROWS_AS(a.backward(two), std::invalid_argument);
  VarVec one{x * 2.0};
  CHECK(a.backward(one)[x.index()] == doctest::Approx(2.0));
}
