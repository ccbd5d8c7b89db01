#include "spherear/space.hpp"

#include <algorithm>
#include <cmath>

namespace spherear {

namespace {

constexpr double kCoincidentTol = 1e-12;  // |<x1,x2>| > 1 - tol: same/antipodal
constexpr double kUnitNormTol = 1e-9;

double clamp_cos(double c) { return std::clamp(c, -1.0, 1.0); }

}  // namespace

Weights unit_weights(Eigen::Index d) {
  return std::make_shared<const Vec>(Vec::Ones(d));
}

Weights make_weights(Vec w) {
  if (w.size() == 0 || (w.array() <= 0.0).any())
    throw DomainError("quadrature weights must be strictly positive");
  return std::make_shared<const Vec>(std::move(w));
}

AmbientVector ambient(Vec values, Weights weights) {
  if (!weights || values.size() != weights->size())
    throw DimensionError("vector length " + std::to_string(values.size()) +
                         " does not match weight length " +
                         std::to_string(weights ? weights->size() : 0));
  return AmbientVector{std::move(values), std::move(weights)};
}

AmbientVector ambient(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  auto w = unit_weights(v.size());
  return AmbientVector{std::move(v), std::move(w)};
}

bool same_space(const AmbientVector& x, const AmbientVector& y) {
  if (x.values.size() != y.values.size()) return false;
  if (x.weights == y.weights) return true;
  if (!x.weights || !y.weights) return false;
  if (x.weights->size() != y.weights->size()) return false;
  return *x.weights == *y.weights;
}

double inner(const AmbientVector& x, const AmbientVector& y) {
  if (!same_space(x, y))
    throw DimensionError(
        "inner product space mismatch: length " +
        std::to_string(x.values.size()) + " vs " +
        std::to_string(y.values.size()) +
        (x.values.size() == y.values.size() ? " (weights differ)" : ""));
  return (x.values.array() * y.values.array() * x.weights->array()).sum();
}

double norm(const AmbientVector& x) { return std::sqrt(inner(x, x)); }

SpherePoint::SpherePoint(AmbientVector vec) : v(std::move(vec)) {
  const double n = norm(v);
  if (std::abs(n - 1.0) > kUnitNormTol)
    throw DomainError("sphere point norm " + std::to_string(n) +
                      " deviates from 1 beyond tolerance");
}

SpherePoint SpherePoint::normalized(AmbientVector vec) {
  const double n = norm(vec);
  if (n < 1e-300) throw DomainError("cannot normalize a zero vector");
  vec.values /= n;
  return SpherePoint(std::move(vec));
}

SpherePoint sphere_point(std::initializer_list<double> values) {
  return SpherePoint::normalized(ambient(values));
}

double geodesic_distance(const SpherePoint& x1, const SpherePoint& x2) {
  return std::acos(clamp_cos(inner(x1.v, x2.v)));
}

SpherePoint geodesic_point(const SpherePoint& x1, const SpherePoint& x2,
                           double a) {
  const double c = clamp_cos(inner(x1.v, x2.v));
  if (c > 1.0 - kCoincidentTol) return x1;
  if (c < -1.0 + kCoincidentTol)
    throw DomainError("geodesic undefined for antipodal points");
  const double theta = std::acos(c);
  Vec u2 = x2.v.values - c * x1.v.values;
  u2 /= norm(AmbientVector{u2, x1.v.weights});
  Vec out = std::cos(a * theta) * x1.v.values + std::sin(a * theta) * u2;
  return SpherePoint::normalized(AmbientVector{std::move(out), x1.v.weights});
}

namespace {

// Tangent-space log map at z: returns the tangent vector pointing at x
// with length d(z,x).
Vec log_map(const SpherePoint& z, const SpherePoint& x) {
  const double c = clamp_cos(inner(z.v, x.v));
  Vec u = x.v.values - c * z.v.values;
  const double nu = norm(AmbientVector{u, z.v.weights});
  if (nu < 1e-15) return Vec::Zero(z.dim());
  return (std::acos(c) / nu) * u;
}

SpherePoint exp_map(const SpherePoint& z, const Vec& t) {
  const double nt = norm(AmbientVector{t, z.v.weights});
  if (nt < 1e-15) return z;
  Vec out = std::cos(nt) * z.v.values + (std::sin(nt) / nt) * t;
  return SpherePoint::normalized(AmbientVector{std::move(out), z.v.weights});
}

double sum_sq_dist(const SpherePoint& z, std::span<const SpherePoint> pts) {
  double s = 0.0;
  for (const auto& x : pts) {
    const double d = geodesic_distance(z, x);
    s += d * d;
  }
  return s;
}

}  // namespace

SpherePoint frechet_mean(std::span<const SpherePoint> points) {
  if (points.empty()) throw DomainError("frechet mean of an empty set");
  for (const auto& x : points)
    if (!same_space(points.front().v, x.v))
      throw DimensionError("frechet mean inputs live in different spaces");
  if (points.size() == 1) return points.front();

  // Chordal average as starting point; falls back to the first point
  // when the average nearly cancels.
  Vec acc = Vec::Zero(points.front().dim());
  for (const auto& x : points) acc += x.v.values;
  acc /= static_cast<double>(points.size());
  const Weights w = points.front().v.weights;
  SpherePoint z = norm(AmbientVector{acc, w}) < 1e-8
                      ? points.front()
                      : SpherePoint::normalized(AmbientVector{acc, w});

  constexpr int kMaxIter = 200;
  constexpr double kGradTol = 1e-10;
  double grad_norm = 0.0;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Vec mean_log = Vec::Zero(z.dim());
    for (const auto& x : points) mean_log += log_map(z, x);
    mean_log /= static_cast<double>(points.size());
    grad_norm = norm(AmbientVector{mean_log, w});
    if (grad_norm <= kGradTol) return z;

    const double f0 = sum_sq_dist(z, points);
    double step = 1.0;
    while (true) {
      SpherePoint cand = exp_map(z, step * mean_log);
      if (sum_sq_dist(cand, points) <= f0 || step < 1e-8) {
        z = cand;
        break;
      }
      step *= 0.5;
    }
  }
  throw ConvergenceError(
      "frechet mean did not converge; gradient norm " +
          std::to_string(grad_norm),
      grad_norm);
}

}  // namespace spherear
