#pragma once

#include <Eigen/Core>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "spherear/errors.hpp"

namespace spherear {

using Vec = Eigen::VectorXd;

// Quadrature weights shared by all vectors of one space. For R^d the
// weights are all ones; for gridded functions they are the cell areas,
// so that <x,y> = sum_i w_i x_i y_i approximates the L2 inner product.
using Weights = std::shared_ptr<const Vec>;

Weights unit_weights(Eigen::Index d);
Weights make_weights(Vec w);  // requires strictly positive entries

/// Element of a weighted inner-product space.
struct AmbientVector {
  Vec values;
  Weights weights;

  Eigen::Index dim() const { return values.size(); }
};

AmbientVector ambient(Vec values, Weights weights);
AmbientVector ambient(std::initializer_list<double> values);

// True when the two vectors live in the same space (equal length and
// identical weights; shared weight objects compare in O(1)).
bool same_space(const AmbientVector& x, const AmbientVector& y);

double inner(const AmbientVector& x, const AmbientVector& y);
double norm(const AmbientVector& x);

/// Unit-norm element of the ambient space; |norm - 1| <= 1e-9 is enforced
/// at construction.
struct SpherePoint {
  AmbientVector v;

  explicit SpherePoint(AmbientVector vec);
  // Rescales to unit norm first; throws DomainError on a zero vector.
  static SpherePoint normalized(AmbientVector vec);

  Eigen::Index dim() const { return v.dim(); }
};

SpherePoint sphere_point(std::initializer_list<double> values);

// Geodesic (great circle) distance d(x1,x2) = arccos<x1,x2>, in [0, pi].
// The inner product is clamped to [-1,1] before arccos.
double geodesic_distance(const SpherePoint& x1, const SpherePoint& x2);

// Point at parameter a in [0,1] on the minimal geodesic from x1 to x2.
// Identical inputs return x1 for any a; antipodal inputs are rejected.
SpherePoint geodesic_point(const SpherePoint& x1, const SpherePoint& x2,
                           double a);

// Intrinsic (Karcher) mean: argmin_z sum_t d^2(z, x_t). Gradient descent
// on the sphere from the normalized chordal average, step halving on
// objective increase, at most 200 iterations, tolerance 1e-10 on the
// Riemannian gradient norm. Throws ConvergenceError (carrying the final
// gradient norm) if the tolerance is not reached.
SpherePoint frechet_mean(std::span<const SpherePoint> points);

}  // namespace spherear
