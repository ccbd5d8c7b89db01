#pragma once

#include <nlohmann/json_fwd.hpp>
#include <span>
#include <utility>
#include <vector>

#include "spherear/space.hpp"

namespace spherear {

/// One weighted rank-2 term coef * (a (x) b - b (x) a). The atom acts on
/// vectors as y -> coef * (<a,y> b - <b,y> a), matching the convention
/// Q(y) = <u1,y> u2 - <u2,y> u1 of the rotation generator.
struct SkewAtom {
  double coef = 0.0;
  Vec a;
  Vec b;
};

/// Skew-symmetric operator stored as a list of atoms. The representation
/// never materializes a d x d matrix; all algebra works through inner
/// products of the atom vectors. An empty atom list is the zero operator.
struct SkewOperator {
  Eigen::Index dim = 0;
  Weights weights;
  std::vector<SkewAtom> atoms;

  static SkewOperator zero(Eigen::Index d, Weights w);
  bool is_zero() const { return atoms.empty(); }
};

// Spherical difference x2 (-) x1 = theta * Q with theta = arccos<x1,x2>
// and Q = u1 (x) u2 - u2 (x) u1, u1 = x1, u2 the normalized residual of
// x2 against x1. Coincident points give the zero operator; antipodal
// points are rejected. rotate(spherical_log(x1,x2), x1) reproduces x2.
SkewOperator spherical_log(const SpherePoint& x1, const SpherePoint& x2);

AmbientVector apply(const SkewOperator& L, const AmbientVector& x);

// Inner product in H (x) H, computed atom-pairwise:
// <A1, A2> = 2 c1 c2 (<a1,a2><b1,b2> - <a1,b2><b1,a2>).
double hs_inner(const SkewOperator& L1, const SkewOperator& L2);
double hs_norm(const SkewOperator& L);

using WeightedTerm = std::pair<double, const SkewOperator*>;

// Linear combination sum_i c_i L_i. Atom lists are concatenated with
// scaled coefficients; when the count exceeds min(4*dim, 64) the result
// is compressed, provided compression actually shrinks the atom list.
SkewOperator lincomb(std::span<const WeightedTerm> terms);
SkewOperator lincomb(std::initializer_list<WeightedTerm> terms);
SkewOperator scale(double c, const SkewOperator& L);

// Re-expresses L on an orthonormal basis of the span of its atom
// vectors (modified Gram-Schmidt with re-orthogonalization, residual
// drop tolerance 1e-12). The result equals L as a linear map and has at
// most k(k-1)/2 atoms for span dimension k.
SkewOperator compress(const SkewOperator& L);

// Action of the rotation exp(L). Single atoms with orthonormal vectors
// use the closed form exp(tQ) = I + sin(t) Q + (1 - cos(t)) Q^2; the
// general case restricts L to the span of its atoms, exponentiates the
// small skew matrix there and leaves the orthogonal complement fixed.
AmbientVector rotate_vector(const SkewOperator& L, const AmbientVector& x);
SpherePoint rotate(const SkewOperator& L, const SpherePoint& x);

namespace detail {
// General subspace-exponential path regardless of atom count; exposed so
// the closed form and the generic code path can be compared directly.
AmbientVector rotate_vector_general(const SkewOperator& L,
                                    const AmbientVector& x);

// Dense exponential of a small skew matrix by scaling and squaring with
// a degree-12 truncated Taylor kernel (norm scaled below 0.5).
Eigen::MatrixXd expm_small_skew(const Eigen::MatrixXd& A);

// Orthonormal basis (weighted inner product) of the span of the atom
// vectors of L, as columns of a d x k matrix.
Eigen::MatrixXd atom_span_basis(const SkewOperator& L);
}  // namespace detail

void to_json(nlohmann::json& j, const SkewOperator& L);
void from_json(const nlohmann::json& j, SkewOperator& L);

}  // namespace spherear
