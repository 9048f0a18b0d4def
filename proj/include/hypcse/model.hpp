#pragma once

// Lorentz neural layers and the learnable pieces of the pipeline. Forward
// passes are recorded on an ad::Tape; parameters live in a ParamStore and
// are bound to fresh tape leaves each step.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypcse/autodiff.hpp"
#include "hypcse/graph.hpp"
#include "hypcse/matrix.hpp"
#include "hypcse/random.hpp"

namespace hypcse::model {

enum class ParamKind { Euclidean, Lorentz };

/// Row-major tensor. Lorentz parameters store one hyperboloid point per row.
struct Parameter {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  ParamKind kind = ParamKind::Euclidean;
};

class ParamStore {
 public:
  /// Throws std::invalid_argument on a duplicate name or a size mismatch.
  std::size_t add(std::string name, std::size_t rows, std::size_t cols, std::vector<double> values,
                  ParamKind kind = ParamKind::Euclidean);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t total_values() const;

 private:
  std::vector<Parameter> params_;
};

/// Every parameter of a store as tape leaves.
class Bound {
 public:
  Bound(ad::Tape& tape, const ParamStore& store);
  std::span<const ad::Var> operator[](std::size_t i) const { return vars_[i]; }
  ad::Tape& tape() const { return *tape_; }
  /// Per-parameter slices of a backward() result.
  std::vector<std::vector<double>> gradients(const std::vector<double>& adjoints) const;

 private:
  ad::Tape* tape_;
  std::vector<ad::VarVec> vars_;
};

using Points = std::vector<ad::VarVec>;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) entries.
std::vector<double> uniform_init(std::size_t rows, std::size_t cols, Rng& rng);

/// v = act(Theta x) + b, output (sqrt(|v|^2 + 1), v). Theta acts on the full
/// input vector (time coordinate included); act is a leaky rectifier with
/// slope 0.1 for hidden layers and the identity otherwise. With max_norm > 0,
/// v is rescaled to max_norm tanh(|v| / max_norm) / |v| times itself, so the
/// output stays within distance asinh(max_norm) of the origin.
struct LorentzLinear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in_coords = 0;
  std::size_t out_dim = 0;
  bool hidden = false;
  double max_norm = 0.0;

  static constexpr double kLeakySlope = 0.1;

  static LorentzLinear create(ParamStore& store, const std::string& name, std::size_t in_coords,
                              std::size_t out_dim, bool hidden, Rng& rng);
  ad::VarVec forward(const Bound& p, std::span<const ad::Var> x) const;
  ad::VarVec forward(const Bound& p, std::span<const double> x) const;
};

/// R tanh(|v| / R) / |v| as a smooth function of sq = |v|^2.
ad::Var soft_clip_factor(ad::Var sq, double max_norm);

/// Lorentz point (sqrt(|v|^2 + 1), v) built from a spatial part.
ad::VarVec lift(std::span<const ad::Var> v);
std::vector<double> lift(std::span<const double> v);

/// Neighborhoods used by attention; every vertex lists itself first.
/// `log_weights` is either empty or holds one additive logit per neighbor.
struct AttentionGraph {
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<ad::Var>> log_weights;

  static AttentionGraph from_graph(const graph::WeightedGraph& g);
};

/// w_ij = softmax over j in N(i) of -d_L(q_i, k_j)^2 / sqrt(dim) (plus
/// log_weights when present); output_i = sum_j w_ij v_j / |<s, s>_L|^(1/2).
/// `weights_out` receives the attention weights when non-null.
Points lorentz_aggregate(const Points& q, const Points& k, const Points& v,
                         const AttentionGraph& g,
                         std::vector<std::vector<double>>* weights_out = nullptr);

/// LLinear followed by attention aggregation with its own Q, K, V layers.
struct LorentzConv {
  LorentzLinear linear;
  LorentzLinear query;
  LorentzLinear key;
  LorentzLinear value;

  /// `max_norm` applies to all four linear maps.
  static LorentzConv create(ParamStore& store, const std::string& name, std::size_t in_coords,
                            std::size_t out_dim, bool hidden, Rng& rng, double max_norm = 0.0);
  Points forward(const Bound& p, const Points& x, const AttentionGraph& g) const;
  /// Aggregation stage applied to an already transformed input.
  Points attend(const Bound& p, const Points& h, const AttentionGraph& g) const;
};

struct Encoder {
  static constexpr int kLayers = 3;
  std::vector<LorentzConv> layers;

  static Encoder create(ParamStore& store, std::size_t in_features, std::size_t hidden,
                        std::size_t embed, Rng& rng, double max_norm = 0.0);
  /// Lifts the rows of `features` onto the hyperboloid and runs the stack.
  Points forward(const Bound& p, const Matrix& features, const AttentionGraph& g) const;
};

struct Projector {
  LorentzLinear first;
  LorentzLinear second;

  static Projector create(ParamStore& store, std::size_t embed, std::size_t hidden, Rng& rng,
                          double max_norm = 0.0);
  Points forward(const Bound& p, const Points& z) const;
};

enum class LearnerKind { Gcn, Mlp };

/// Two-layer Euclidean embedding network whose row-normalized outputs define
/// learner affinities.
struct GraphLearner {
  LearnerKind kind = LearnerKind::Gcn;
  std::size_t w1 = 0;
  std::size_t b1 = 0;
  std::size_t w2 = 0;
  std::size_t b2 = 0;
  bool activation = true;

  static GraphLearner create(ParamStore& store, LearnerKind kind, std::size_t in_features,
                             std::size_t hidden, Rng& rng);
  /// For Gcn, `g` supplies the symmetric-normalized propagation with
  /// self-loops; Mlp ignores it.
  Points forward(const Bound& p, const Matrix& features, const graph::WeightedGraph& g) const;
};

/// Values of a point set recorded on a tape.
Matrix values_of(const Points& points);

/// Named-tensor text checkpoint:
///   hypcse-checkpoint 1
///   param <name> <kind> <rows> <cols>
///   <values, one row per line>
///   ...
///   edges <n> <m>
///   <u> <v> <w>   (m lines)
/// Values use 17 significant digits so a reload is bit-exact.
void write_checkpoint(std::ostream& out, const ParamStore& store, const graph::WeightedGraph& anchor);
struct Checkpoint {
  ParamStore store;
  graph::WeightedGraph anchor;
};
/// Throws DataError on a malformed stream.
Checkpoint read_checkpoint(std::istream& in);

}  // namespace hypcse::model
