#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape records every primitive as (value, parents, local partials). Nodes
// may have any number of parents, which lets vector kernels (dot products,
// softmax, the CSE soft-volume sum) be recorded as a single fused record
// instead of hundreds of scalar ones. backward() sweeps the records once in
// reverse creation order.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace hypcse::ad {

class Tape;

class Var {
 public:
  Var() = default;
  double value() const;
  int index() const { return index_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}
  Tape* tape_ = nullptr;
  int index_ = -1;
};

using VarVec = std::vector<Var>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf node (parameter or differentiable input).
  Var variable(double value);
  VarVec variables(std::span<const double> values);

  /// Record with arbitrary parents and their local partial derivatives.
  Var record(double value, std::span<const int> parents, std::span<const double> partials);
  Var unary(double value, Var a, double da);
  Var binary(double value, Var a, double da, Var b, double db);

  double value(int index) const { return values_[index]; }
  std::size_t size() const { return values_.size(); }
  std::size_t num_partials() const { return parents_.size(); }

  /// Adjoints d loss / d node for every record. Throws std::invalid_argument
  /// if `loss` belongs to another tape.
  std::vector<double> backward(Var loss);
  /// Overload for vector-valued results; only a single element is accepted.
  std::vector<double> backward(std::span<const Var> loss);

  /// Records processed by the last backward() call.
  std::size_t last_backward_visits() const { return last_visits_; }

  void clear();
  void reserve(std::size_t nodes, std::size_t partials);

 private:
  std::vector<double> values_;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<int> parents_;
  std::vector<double> partials_;
  std::size_t last_visits_ = 0;
};

inline double Var::value() const { return tape_->value(index_); }

// Arithmetic ----------------------------------------------------------------

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var exp(Var a);
Var log(Var a);
Var log2(Var a);
Var sqrt(Var a);
Var square(Var a);
Var cosh(Var a);
Var sinh(Var a);
/// arcosh with the argument clamped to >= 1; the derivative is bounded by
/// clamping z^2 - 1 below at 1e-12.
Var acosh(Var a);
/// artanh with the argument clamped to (-1 + 1e-12, 1 - 1e-12).
Var atanh(Var a);
/// arcosh(z)^2 with a stable derivative near z = 1 (limit 2).
Var acosh_sq(Var a);
Var leaky_relu(Var a, double slope);
/// max(a, lo); gradient is zero where the clamp is active.
Var clamp_min(Var a, double lo);
Var abs(Var a);

// Fused vector kernels --------------------------------------------------------

Var sum(std::span<const Var> xs);
Var dot(std::span<const Var> x, std::span<const Var> y);
Var dot(std::span<const double> w, std::span<const Var> x);
/// -x0 y0 + sum_i xi yi.
Var lorentz_inner(std::span<const Var> x, std::span<const Var> y);
/// sum_i w_i x_i with differentiable weights.
Var weighted_sum(std::span<const Var> w, std::span<const Var> x);
/// Hyperboloid distance 2 asinh(m / 2), m^2 = <x - y, x - y>_L; the gradient
/// stays bounded as x -> y, unlike arcosh(-<x, y>_L).
Var lorentz_distance(std::span<const Var> x, std::span<const Var> y);
Var lorentz_sq_distance(std::span<const Var> x, std::span<const Var> y);
VarVec softmax(std::span<const Var> logits);
/// log softmax(logits)[index], computed with max subtraction.
Var log_softmax_at(std::span<const Var> logits, std::size_t index);

/// Reads values of a vector of Vars.
std::vector<double> values(std::span<const Var> xs);

}  // namespace hypcse::ad
