#pragma once

// Hyperbolic geometry kernels for the Lorentz (hyperboloid) and Poincare
// ball models. Curvature is fixed at -1 for the Poincare side, so the ball
// has unit radius.

#include <cmath>
#include <span>
#include <vector>

namespace hypcse::geometry {

inline constexpr double kCurvature = -1.0;
/// artanh arguments are clamped to at most 1 - kArtanhClamp.
inline constexpr double kArtanhClamp = 1e-12;
inline constexpr double kManifoldTol = 1e-6;

struct ManifoldConfig {
  double curvature = kCurvature;
  int dim = 2;
  /// Throws std::invalid_argument unless curvature < 0 and dim >= 2.
  void validate() const;
};

/// Point on the hyperboloid; coords[0] is the time-like component.
struct LorentzVec {
  std::vector<double> coords;
  std::size_t dim() const { return coords.size() - 1; }
};

/// Point strictly inside the unit ball.
struct PoincareVec {
  std::vector<double> coords;
  std::size_t dim() const { return coords.size(); }
};

/// <x, y>_L = -x0 y0 + sum_i xi yi.
double lorentz_inner(std::span<const double> x, std::span<const double> y);
inline double lorentz_inner(const LorentzVec& x, const LorentzVec& y) {
  return lorentz_inner(x.coords, y.coords);
}

/// Geodesic distance on the hyperboloid of curvature `kappa`.
/// Throws std::invalid_argument on dimension mismatch or off-manifold input.
double lorentz_distance(const LorentzVec& x, const LorentzVec& y, double kappa = kCurvature);

/// Distance from the hyperboloid origin (1, 0, ..., 0).
double lorentz_origin_distance(const LorentzVec& x, double kappa = kCurvature);

LorentzVec lorentz_origin(std::size_t dim);

PoincareVec lorentz_to_poincare(const LorentzVec& x);

/// Throws std::invalid_argument when ||u|| >= 1.
LorentzVec poincare_to_lorentz(const PoincareVec& u);

/// True if <x, x>_L = 1/kappa within `tol` and x0 > 0.
bool on_manifold(const LorentzVec& x, double kappa = kCurvature, double tol = kManifoldTol);

/// Recomputes x0 from the space-like part so the point lies exactly on the
/// hyperboloid.
void renormalize(LorentzVec& x, double kappa = kCurvature);

/// Projection onto the tangent space at x: v - kappa <x, v>_L x.
std::vector<double> tangent_project(const LorentzVec& x, std::span<const double> v,
                                    double kappa = kCurvature);

/// Exponential map at x for a tangent vector v; the result is renormalized.
LorentzVec expmap(const LorentzVec& x, std::span<const double> v, double kappa = kCurvature);

/// Minkowski norm of a tangent (space-like) vector, sqrt(max(<v,v>_L, 0)).
double tangent_norm(std::span<const double> v);

/// Value of the origin-distance quantity for a geodesic that degenerates to
/// the single point p with ||p||^2 = `sq_norm`. This is the limit of
/// geodesic_origin_distance(p, q) as q -> p.
double point_origin_value(double sq_norm);

/// Hyperbolic LCA depth of the geodesic segment between x and y in the
/// Poincare ball: artanh(||o_ref||^2) / 2, where o_ref is the reflection of
/// the origin through the geodesic. Computed by the circle-inversion chain:
/// r = x/||x||^2, y_inv = inversion of y in the circle centred at r (which
/// sends x to the origin), reflection of x across the line through y_inv,
/// and inversion back.
///
/// When the point of the full geodesic closest to the origin falls outside
/// the segment (obtuse angle at an endpoint), the nearer endpoint's
/// point_origin_value is returned. Returns 0 if either point is the origin.
double geodesic_origin_distance(std::span<const double> x, std::span<const double> y);
inline double geodesic_origin_distance(const PoincareVec& x, const PoincareVec& y) {
  return geodesic_origin_distance(x.coords, y.coords);
}

/// Same quantity expressed through a = ||x||^2, b = ||y||^2 and
/// e = ||x - y||^2. Every term stays well conditioned as x and y approach
/// each other. Works for any scalar type with arithmetic, sqrt, log and a
/// `value_of` overload, so the autodiff layer can reuse it.
template <class T>
T geodesic_origin_gram(const T& a, const T& b, const T& e);

// ---------------------------------------------------------------------------

inline double value_of(double v) { return v; }

namespace detail {

inline constexpr double kOriginEps = 1e-30;
inline constexpr double kCoincideSq = 1e-24;

template <class T>
T artanh_clamped(const T& s) {
  using std::log;
  const double limit = 1.0 - kArtanhClamp;
  if (value_of(s) > limit) {
    return T(std::atanh(limit));
  }
  if (value_of(s) < 0.0) {
    return T(0.0);
  }
  return 0.5 * log((1.0 + s) / (1.0 - s));
}

template <class T>
T point_value(const T& sq_norm) {
  // ||o_ref|| = 2s / (1 + s^2) for a point at Euclidean norm s.
  const T denom = (1.0 + sq_norm) * (1.0 + sq_norm);
  return 0.5 * artanh_clamped<T>(4.0 * sq_norm / denom);
}

}  // namespace detail

template <class T>
T geodesic_origin_gram(const T& a, const T& b, const T& e) {
  const double av = value_of(a);
  const double bv = value_of(b);
  const double ev = value_of(e);
  if (av < detail::kOriginEps || bv < detail::kOriginEps) {
    return T(0.0);
  }
  if (ev < detail::kCoincideSq) {
    return detail::point_value<T>(av <= bv ? a : b);
  }
  // Obtuse angle at an endpoint: the segment's closest point is that endpoint.
  const double gap = av - bv;
  if (gap * (1.0 - av) + ev * (1.0 + av) < 0.0) {
    return detail::point_value<T>(a);
  }
  if (-gap * (1.0 - bv) + ev * (1.0 + bv) < 0.0) {
    return detail::point_value<T>(b);
  }
  // ||(1+a)y - (1+b)x||^2 and 4(ab - <x,y>^2) rewritten through e.
  const T diff = a - b;
  const T denom = (1.0 + a) * (1.0 + b) * e - diff * diff;
  if (value_of(denom) <= 0.0) {
    return detail::point_value<T>(av <= bv ? a : b);
  }
  const T s2 = (2.0 * (a + b) * e - diff * diff - e * e) / denom;
  return 0.5 * detail::artanh_clamped<T>(s2);
}

}  // namespace hypcse::geometry
