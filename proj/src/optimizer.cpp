#include "hypcse/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "hypcse/errors.hpp"
#include "hypcse/geometry.hpp"

namespace hypcse::model {

RiemannianAdam::RiemannianAdam(const ParamStore& store, std::vector<std::size_t> params,
                               AdamConfig config)
    : config_(config), params_(std::move(params)) {
  if (!(config_.lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  for (std::size_t idx : params_) {
    if (idx >= store.size()) throw std::invalid_argument("optimizer: unknown parameter index");
    const Parameter& p = store[idx];
    m_.emplace_back(p.values.size(), 0.0);
    v_.emplace_back(p.kind == ParamKind::Lorentz ? p.rows : p.values.size(), 0.0);
  }
}

void RiemannianAdam::step(ParamStore& store, const std::vector<std::vector<double>>& grads) {
  for (std::size_t idx : params_) {
    const auto& g = grads.at(idx);
    if (g.size() != store[idx].values.size()) {
      throw std::invalid_argument("optimizer: gradient shape mismatch for " + store[idx].name);
    }
    for (double x : g) {
      if (!std::isfinite(x)) throw NumericError("non-finite gradient in parameter " + store[idx].name);
    }
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));

  for (std::size_t s = 0; s < params_.size(); ++s) {
    Parameter& p = store[params_[s]];
    const auto& g = grads[params_[s]];
    auto& m = m_[s];
    auto& v = v_[s];
    if (p.kind == ParamKind::Euclidean) {
      for (std::size_t i = 0; i < p.values.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p.values[i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      }
      continue;
    }
    const std::size_t cols = p.cols;
    for (std::size_t r = 0; r < p.rows; ++r) {
      geometry::LorentzVec x{{p.values.begin() + r * cols, p.values.begin() + (r + 1) * cols}};
      // Riemannian gradient: flip the time-like sign, then project.
      std::vector<double> eg(g.begin() + r * cols, g.begin() + (r + 1) * cols);
      eg[0] = -eg[0];
      const std::vector<double> rg = geometry::tangent_project(x, eg);
      std::vector<double> mr(m.begin() + r * cols, m.begin() + (r + 1) * cols);
      for (std::size_t c = 0; c < cols; ++c) mr[c] = b1 * mr[c] + (1.0 - b1) * rg[c];
      v[r] = b2 * v[r] + (1.0 - b2) * std::max(0.0, geometry::lorentz_inner(rg, rg));
      const double denom = std::sqrt(v[r] / c2) + config_.eps;
      std::vector<double> dir(cols);
      for (std::size_t c = 0; c < cols; ++c) dir[c] = -config_.lr * (mr[c] / c1) / denom;
      const geometry::LorentzVec y = geometry::expmap(x, dir);
      const std::vector<double> moved = geometry::tangent_project(y, mr);
      for (std::size_t c = 0; c < cols; ++c) {
        p.values[r * cols + c] = y.coords[c];
        m[r * cols + c] = moved[c];
      }
    }
  }
}

}  // namespace hypcse::model
