#include "spherear/skew.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace spherear {

namespace {

constexpr double kCoincidentTol = 1e-12;
constexpr double kGramSchmidtDropTol = 1e-12;
constexpr double kOrthonormalTol = 1e-12;

void check_space(const SkewOperator& L, const AmbientVector& x) {
  if (!same_space(AmbientVector{Vec::Zero(L.dim), L.weights}, x))
    throw DimensionError("operator dimension " + std::to_string(L.dim) +
                         " does not match vector length " +
                         std::to_string(x.values.size()));
}

void check_space(const SkewOperator& L1, const SkewOperator& L2) {
  if (!same_space(AmbientVector{Vec::Zero(L1.dim), L1.weights},
                  AmbientVector{Vec::Zero(L2.dim), L2.weights}))
    throw DimensionError("operators live in different spaces: dim " +
                         std::to_string(L1.dim) + " vs " +
                         std::to_string(L2.dim));
}

}  // namespace

SkewOperator SkewOperator::zero(Eigen::Index d, Weights w) {
  return SkewOperator{d, std::move(w), {}};
}

SkewOperator spherical_log(const SpherePoint& x1, const SpherePoint& x2) {
  const double c = std::clamp(inner(x1.v, x2.v), -1.0, 1.0);
  if (c > 1.0 - kCoincidentTol)
    return SkewOperator::zero(x1.dim(), x1.v.weights);
  if (c < -1.0 + kCoincidentTol)
    throw DomainError("log undefined at antipode");
  const double theta = std::acos(c);
  Vec u2 = x2.v.values - c * x1.v.values;
  u2 /= norm(AmbientVector{u2, x1.v.weights});
  SkewOperator out{x1.dim(), x1.v.weights, {}};
  out.atoms.push_back(SkewAtom{theta, x1.v.values, std::move(u2)});
  return out;
}

AmbientVector apply(const SkewOperator& L, const AmbientVector& x) {
  check_space(L, x);
  Vec out = Vec::Zero(L.dim);
  const Vec wx = L.weights->cwiseProduct(x.values);
  for (const auto& atom : L.atoms) {
    const double ca = atom.a.dot(wx);
    const double cb = atom.b.dot(wx);
    out += atom.coef * (ca * atom.b - cb * atom.a);
  }
  return AmbientVector{std::move(out), x.weights};
}

double hs_inner(const SkewOperator& L1, const SkewOperator& L2) {
  check_space(L1, L2);
  if (L1.atoms.empty() || L2.atoms.empty()) return 0.0;
  const Vec& w = *L1.weights;
  // Weighted copies of the first operand's atom vectors so each pair
  // costs four plain dot products.
  std::vector<Vec> wa1(L1.atoms.size()), wb1(L1.atoms.size());
  for (std::size_t i = 0; i < L1.atoms.size(); ++i) {
    wa1[i] = w.cwiseProduct(L1.atoms[i].a);
    wb1[i] = w.cwiseProduct(L1.atoms[i].b);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < L1.atoms.size(); ++i) {
    const double c1 = L1.atoms[i].coef;
    for (const auto& a2 : L2.atoms) {
      const double aa = wa1[i].dot(a2.a);
      const double bb = wb1[i].dot(a2.b);
      const double ab = wa1[i].dot(a2.b);
      const double ba = wb1[i].dot(a2.a);
      s += 2.0 * c1 * a2.coef * (aa * bb - ab * ba);
    }
  }
  return s;
}

double hs_norm(const SkewOperator& L) {
  return std::sqrt(std::max(0.0, hs_inner(L, L)));
}

SkewOperator lincomb(std::span<const WeightedTerm> terms) {
  if (terms.empty()) throw DomainError("lincomb of an empty term list");
  const SkewOperator* first = terms.front().second;
  SkewOperator out{first->dim, first->weights, {}};
  std::size_t total = 0;
  for (const auto& [c, op] : terms) {
    check_space(*first, *op);
    if (c != 0.0) total += op->atoms.size();
  }
  out.atoms.reserve(total);
  for (const auto& [c, op] : terms) {
    if (c == 0.0) continue;
    for (const auto& atom : op->atoms)
      out.atoms.push_back(SkewAtom{c * atom.coef, atom.a, atom.b});
  }
  // Growth control for iterated combinations: compress once the atom
  // list is clearly longer than the span could justify, but keep the
  // original when the basis form would be larger.
  const std::size_t limit =
      std::min<std::size_t>(64, 4 * static_cast<std::size_t>(out.dim));
  if (out.atoms.size() > limit) {
    SkewOperator packed = compress(out);
    if (packed.atoms.size() < out.atoms.size()) return packed;
  }
  return out;
}

SkewOperator lincomb(std::initializer_list<WeightedTerm> terms) {
  return lincomb(std::span<const WeightedTerm>(terms.begin(), terms.size()));
}

SkewOperator scale(double c, const SkewOperator& L) {
  return lincomb({WeightedTerm{c, &L}});
}

namespace detail {

Eigen::MatrixXd atom_span_basis(const SkewOperator& L) {
  const Vec& w = *L.weights;
  std::vector<Vec> basis;
  basis.reserve(2 * L.atoms.size());
  auto wdot = [&w](const Vec& x, const Vec& y) {
    return (x.array() * y.array() * w.array()).sum();
  };
  for (const auto& atom : L.atoms) {
    for (const Vec* v : {&atom.a, &atom.b}) {
      Vec r = *v;
      const double input_norm = std::sqrt(wdot(r, r));
      for (int pass = 0; pass < 2; ++pass)  // re-orthogonalization pass
        for (const Vec& q : basis) r -= wdot(q, r) * q;
      const double rn = std::sqrt(wdot(r, r));
      if (rn > kGramSchmidtDropTol * std::max(1.0, input_norm))
        basis.push_back(r / rn);
    }
  }
  Eigen::MatrixXd B(L.dim, static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index j = 0; j < B.cols(); ++j) B.col(j) = basis[j];
  return B;
}

Eigen::MatrixXd expm_small_skew(const Eigen::MatrixXd& A) {
  const Eigen::Index k = A.rows();
  int squarings = 0;
  double nrm = A.norm();
  while (nrm > 0.5) {
    nrm *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd B = A / std::ldexp(1.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd sum = term;
  for (int l = 1; l <= 12; ++l) {
    term = (term * B) / static_cast<double>(l);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

AmbientVector rotate_vector_general(const SkewOperator& L,
                                    const AmbientVector& x) {
  const Eigen::MatrixXd B = atom_span_basis(L);
  const Eigen::Index k = B.cols();
  if (k == 0) return x;
  const Vec wx = L.weights->cwiseProduct(x.values);

  // Restriction A(i,j) = <q_i, L q_j> of L to its atom span.
  Eigen::MatrixXd A(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const AmbientVector lq =
        apply(L, AmbientVector{B.col(j), L.weights});
    for (Eigen::Index i = 0; i < k; ++i)
      A(i, j) = (B.col(i).array() * lq.values.array() *
                 L.weights->array())
                    .sum();
  }
  A = 0.5 * (A - A.transpose()).eval();  // kill roundoff asymmetry

  const Eigen::VectorXd coords = B.transpose() * wx;
  const Eigen::MatrixXd E = expm_small_skew(A);
  // x = x_perp + B c; the perpendicular part is a fixed point, so the
  // image is x + B (exp(A) - I) c.
  Vec out = x.values + B * ((E - Eigen::MatrixXd::Identity(k, k)) * coords);
  return AmbientVector{std::move(out), x.weights};
}

}  // namespace detail

SkewOperator compress(const SkewOperator& L) {
  if (L.atoms.empty()) return L;
  const Eigen::MatrixXd B = detail::atom_span_basis(L);
  const Eigen::Index k = B.cols();
  SkewOperator out{L.dim, L.weights, {}};
  if (k == 0) return out;

  Eigen::MatrixXd A(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const AmbientVector lq = apply(L, AmbientVector{B.col(j), L.weights});
    for (Eigen::Index i = 0; i < k; ++i)
      A(i, j) =
          (B.col(i).array() * lq.values.array() * L.weights->array()).sum();
  }
  A = 0.5 * (A - A.transpose()).eval();

  const double scale = A.cwiseAbs().maxCoeff();
  if (scale == 0.0) return out;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double c = A(j, i);  // coefficient of q_j in L q_i
      if (std::abs(c) > 1e-15 * scale)
        out.atoms.push_back(SkewAtom{c, B.col(i), B.col(j)});
    }
  return out;
}

AmbientVector rotate_vector(const SkewOperator& L, const AmbientVector& x) {
  check_space(L, x);
  if (L.atoms.empty()) return x;
  if (L.atoms.size() == 1) {
    const auto& atom = L.atoms.front();
    const AmbientVector a{atom.a, L.weights};
    const AmbientVector b{atom.b, L.weights};
    const double naa = inner(a, a);
    const double nbb = inner(b, b);
    const double nab = inner(a, b);
    if (std::abs(naa - 1.0) <= kOrthonormalTol &&
        std::abs(nbb - 1.0) <= kOrthonormalTol &&
        std::abs(nab) <= kOrthonormalTol) {
      // exp(tQ) = I + sin(t) Q + (1 - cos(t)) Q^2 for an orthonormal atom.
      const double t = atom.coef;
      const double ca = inner(a, x);
      const double cb = inner(b, x);
      Vec out = x.values + std::sin(t) * (ca * atom.b - cb * atom.a) -
                (1.0 - std::cos(t)) * (ca * atom.a + cb * atom.b);
      return AmbientVector{std::move(out), x.weights};
    }
  }
  return detail::rotate_vector_general(L, x);
}

SpherePoint rotate(const SkewOperator& L, const SpherePoint& x) {
  return SpherePoint::normalized(rotate_vector(L, x.v));
}

void to_json(nlohmann::json& j, const SkewOperator& L) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& atom : L.atoms) {
    atoms.push_back({{"coef", atom.coef},
                     {"a", std::vector<double>(atom.a.begin(), atom.a.end())},
                     {"b", std::vector<double>(atom.b.begin(), atom.b.end())}});
  }
  j = nlohmann::json{
      {"dim", L.dim},
      {"weights_ref",
       std::vector<double>(L.weights->begin(), L.weights->end())},
      {"atoms", std::move(atoms)}};
}

void from_json(const nlohmann::json& j, SkewOperator& L) {
  const auto wv = j.at("weights_ref").get<std::vector<double>>();
  Vec w = Eigen::Map<const Vec>(wv.data(), static_cast<Eigen::Index>(wv.size()));
  L.dim = j.at("dim").get<Eigen::Index>();
  if (L.dim != w.size())
    throw FormatError("skew operator dim does not match weights length");
  L.weights = make_weights(std::move(w));
  L.atoms.clear();
  for (const auto& ja : j.at("atoms")) {
    const auto av = ja.at("a").get<std::vector<double>>();
    const auto bv = ja.at("b").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(av.size()) != L.dim ||
        static_cast<Eigen::Index>(bv.size()) != L.dim)
      throw FormatError("skew atom vector length does not match dim");
    L.atoms.push_back(SkewAtom{
        ja.at("coef").get<double>(),
        Eigen::Map<const Vec>(av.data(), L.dim),
        Eigen::Map<const Vec>(bv.data(), L.dim)});
  }
}

}  // namespace spherear
