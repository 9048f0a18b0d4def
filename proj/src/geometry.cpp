#include "hypcse/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hypcse::geometry {

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void check_same_dim(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

// Inversion of p in the circle centred at `centre` with squared radius
// ||centre||^2 - 1 (orthogonal to the unit circle).
std::vector<double> invert(std::span<const double> p, std::span<const double> centre) {
  const double radius_sq = dot(centre, centre) - 1.0;
  std::vector<double> diff(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) diff[i] = p[i] - centre[i];
  const double scale = radius_sq / dot(diff, diff);
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = scale * diff[i] + centre[i];
  return out;
}

}  // namespace

void ManifoldConfig::validate() const {
  if (!(curvature < 0.0)) throw std::invalid_argument("curvature must be negative");
  if (dim < 2) throw std::invalid_argument("manifold dimension must be at least 2");
}

double lorentz_inner(std::span<const double> x, std::span<const double> y) {
  check_same_dim(x.size(), y.size());
  if (x.empty()) return 0.0;
  double s = -x[0] * y[0];
  for (std::size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double lorentz_distance(const LorentzVec& x, const LorentzVec& y, double kappa) {
  check_same_dim(x.coords.size(), y.coords.size());
  if (!on_manifold(x, kappa) || !on_manifold(y, kappa)) {
    throw std::invalid_argument("lorentz_distance: point off the manifold");
  }
  // For curvature kappa: d = arcosh(kappa <x,y>) / sqrt(-kappa).
  const double arg = std::max(1.0, kappa * lorentz_inner(x, y));
  return std::acosh(arg) / std::sqrt(-kappa);
}

double lorentz_origin_distance(const LorentzVec& x, double kappa) {
  return lorentz_distance(lorentz_origin(x.dim()), x, kappa);
}

LorentzVec lorentz_origin(std::size_t dim) {
  LorentzVec o{std::vector<double>(dim + 1, 0.0)};
  o.coords[0] = 1.0;
  return o;
}

PoincareVec lorentz_to_poincare(const LorentzVec& x) {
  PoincareVec u{std::vector<double>(x.dim())};
  const double denom = 1.0 + x.coords[0];
  for (std::size_t i = 0; i < u.coords.size(); ++i) u.coords[i] = x.coords[i + 1] / denom;
  return u;
}

LorentzVec poincare_to_lorentz(const PoincareVec& u) {
  const double sq = dot(u.coords, u.coords);
  if (sq >= 1.0) throw std::invalid_argument("poincare_to_lorentz: point outside the unit ball");
  LorentzVec x{std::vector<double>(u.dim() + 1)};
  const double scale = 1.0 / (1.0 - sq);
  x.coords[0] = (1.0 + sq) * scale;
  for (std::size_t i = 0; i < u.coords.size(); ++i) x.coords[i + 1] = 2.0 * u.coords[i] * scale;
  return x;
}

bool on_manifold(const LorentzVec& x, double kappa, double tol) {
  if (x.coords.size() < 2 || !(x.coords[0] > 0.0)) return false;
  return std::abs(lorentz_inner(x, x) - 1.0 / kappa) <= tol * std::max(1.0, x.coords[0] * x.coords[0]);
}

void renormalize(LorentzVec& x, double kappa) {
  double space = 0.0;
  for (std::size_t i = 1; i < x.coords.size(); ++i) space += x.coords[i] * x.coords[i];
  x.coords[0] = std::sqrt(space - 1.0 / kappa);
}

std::vector<double> tangent_project(const LorentzVec& x, std::span<const double> v, double kappa) {
  check_same_dim(x.coords.size(), v.size());
  const double coef = -kappa * lorentz_inner(x.coords, v);
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += coef * x.coords[i];
  return out;
}

double tangent_norm(std::span<const double> v) {
  return std::sqrt(std::max(0.0, lorentz_inner(v, v)));
}

LorentzVec expmap(const LorentzVec& x, std::span<const double> v, double kappa) {
  check_same_dim(x.coords.size(), v.size());
  const double scale = std::sqrt(-kappa);
  const double norm = tangent_norm(v) * scale;
  if (norm < 1e-12) return x;
  LorentzVec out{std::vector<double>(v.size())};
  const double ch = std::cosh(norm);
  const double sh = std::sinh(norm) / norm;
  for (std::size_t i = 0; i < v.size(); ++i) out.coords[i] = ch * x.coords[i] + sh * v[i];
  renormalize(out, kappa);
  return out;
}

double point_origin_value(double sq_norm) { return detail::point_value<double>(sq_norm); }

double geodesic_origin_distance(std::span<const double> x, std::span<const double> y) {
  check_same_dim(x.size(), y.size());
  const double a = dot(x, x);
  const double b = dot(y, y);
  if (a >= 1.0 || b >= 1.0) {
    throw std::invalid_argument("geodesic_origin_distance: point outside the unit ball");
  }
  if (a < detail::kOriginEps || b < detail::kOriginEps) return 0.0;
  const double c = dot(x, y);
  double diff_sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) diff_sq += (x[i] - y[i]) * (x[i] - y[i]);
  if (diff_sq < detail::kCoincideSq) return point_origin_value(std::min(a, b));
  if (a * (1.0 + b) - c * (1.0 + a) < 0.0) return point_origin_value(a);
  if (b * (1.0 + a) - c * (1.0 + b) < 0.0) return point_origin_value(b);

  // The inversion centred at r = x/||x||^2 is an isometry swapping x and o,
  // so the geodesic (x, y) maps to the diameter through y_inv.
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] / a;
  const std::vector<double> y_inv = invert(y, r);
  const double y_inv_sq = dot(y_inv, y_inv);
  if (y_inv_sq < detail::kCoincideSq) return point_origin_value(std::min(a, b));

  // Image of the origin is x; reflect it across the diameter.
  const double proj = 2.0 * dot(x, y_inv) / y_inv_sq;
  std::vector<double> o_invref(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) o_invref[i] = proj * y_inv[i] - x[i];

  const std::vector<double> o_ref = invert(o_invref, r);
  return 0.5 * detail::artanh_clamped<double>(dot(o_ref, o_ref));
}

}  // namespace hypcse::geometry
