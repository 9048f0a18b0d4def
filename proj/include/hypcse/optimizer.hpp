#pragma once

#include <cstddef>
#include <vector>

#include "hypcse/model.hpp"

namespace hypcse::model {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a subset of a ParamStore. Euclidean parameters take plain Adam
/// steps. Lorentz parameters (one hyperboloid point per row) take Riemannian
/// Adam steps: the Euclidean gradient is converted to a Riemannian one and
/// projected onto the tangent space, the first moment lives in the tangent
/// space with a per-point scalar second moment, the update is an exponential
/// map, and the moment is re-projected at the new point.
class RiemannianAdam {
 public:
  RiemannianAdam(const ParamStore& store, std::vector<std::size_t> params, AdamConfig config);

  /// `grads` is indexed like the store. Throws NumericError naming the
  /// parameter if any managed gradient is not finite; nothing is updated then.
  void step(ParamStore& store, const std::vector<std::vector<double>>& grads);

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<std::size_t> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace hypcse::model
