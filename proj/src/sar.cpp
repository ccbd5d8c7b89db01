#include "spherear/sar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

namespace spherear {

namespace {

constexpr double kAntipodalTol = 1e-12;
constexpr double kConditionLimit = 1e12;
constexpr double kOrthantTol = 1e-12;

}  // namespace

std::string to_string(Variant v) {
  return v == Variant::Sar ? "sar" : "dsar";
}

std::string to_string(Projection p) {
  switch (p) {
    case Projection::Proj1: return "proj1";
    case Projection::Proj2: return "proj2";
    default: return "none";
  }
}

Variant variant_from_string(const std::string& s) {
  if (s == "sar") return Variant::Sar;
  if (s == "dsar") return Variant::Dsar;
  throw FormatError("unknown variant '" + s + "' (expected sar|dsar)");
}

Projection projection_from_string(const std::string& s) {
  if (s == "proj1") return Projection::Proj1;
  if (s == "proj2") return Projection::Proj2;
  if (s == "none") return Projection::None;
  throw FormatError("unknown projection '" + s +
                    "' (expected proj1|proj2|none)");
}

DifferencedSeries build_differenced_series(std::span<const SpherePoint> points,
                                           Variant variant) {
  if (points.size() < 2)
    throw DomainError("need at least two observations to difference");
  for (const auto& x : points)
    if (!same_space(points.front().v, x.v))
      throw DimensionError("series points live in different spaces");

  std::vector<SkewOperator> ops;
  if (variant == Variant::Sar) {
    SpherePoint mean = frechet_mean(points);
    ops.reserve(points.size());
    for (std::size_t t = 0; t < points.size(); ++t) {
      if (inner(mean.v, points[t].v) < -1.0 + kAntipodalTol)
        throw DomainError("observation " + std::to_string(t) +
                          " is antipodal to the Frechet mean");
      ops.push_back(spherical_log(mean, points[t]));
    }
    return DifferencedSeries{variant, std::move(ops), std::move(mean),
                             points.back()};
  }
  ops.reserve(points.size() - 1);
  for (std::size_t t = 0; t + 1 < points.size(); ++t) {
    if (inner(points[t].v, points[t + 1].v) < -1.0 + kAntipodalTol)
      throw DomainError("observations " + std::to_string(t) + " and " +
                        std::to_string(t + 1) + " are antipodal");
    ops.push_back(spherical_log(points[t], points[t + 1]));
  }
  return DifferencedSeries{variant, std::move(ops), points.front(),
                           points.back()};
}

double CenteredBand::at(std::size_t t, std::size_t s) const {
  const std::size_t lo = std::min(t, s);
  const std::size_t k = (t > s) ? t - s : s - t;
  return lag[k][lo];
}

CenteredBand centered_band(std::span<const SkewOperator> ops, int band) {
  const std::size_t m = ops.size();
  if (m == 0) throw DomainError("centered band of an empty series");
  band = std::min<int>(band, static_cast<int>(m) - 1);

  std::vector<WeightedTerm> terms;
  terms.reserve(m);
  const double inv = 1.0 / static_cast<double>(m);
  for (const auto& op : ops) terms.emplace_back(inv, &op);
  SkewOperator mu = lincomb(terms);

  // <R_t - mu, R_s - mu> = <R_t,R_s> - <R_t,mu> - <mu,R_s> + <mu,mu>,
  // so one pass of single-operator inner products against mu suffices.
  std::vector<double> row(m);
  for (std::size_t t = 0; t < m; ++t) row[t] = hs_inner(ops[t], mu);
  const double mm = hs_inner(mu, mu);

  CenteredBand cb;
  cb.n = m;
  cb.band = band;
  cb.lag.resize(static_cast<std::size_t>(band) + 1);
  for (int k = 0; k <= band; ++k) {
    auto& lane = cb.lag[static_cast<std::size_t>(k)];
    lane.resize(m - static_cast<std::size_t>(k));
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < m; ++t)
      lane[t] = hs_inner(ops[t], ops[t + static_cast<std::size_t>(k)]) -
                row[t] - row[t + static_cast<std::size_t>(k)] + mm;
  }
  cb.mean_op = std::move(mu);
  return cb;
}

Eigen::MatrixXd AutocovSequence::toeplitz() const {
  const int p = order();
  Eigen::MatrixXd T(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      T(i, j) = lags[static_cast<std::size_t>(std::abs(i - j))];
  return T;
}

AutocovSequence autocovariances(std::span<const SkewOperator> ops, int p) {
  const std::size_t m = ops.size();
  if (p < 1) throw DomainError("autocovariance order must be >= 1");
  if (m <= static_cast<std::size_t>(p))
    throw DomainError("need more than p = " + std::to_string(p) +
                      " operators, got " + std::to_string(m));
  const CenteredBand cb = centered_band(ops, p);
  AutocovSequence acov;
  acov.n = m;
  acov.lags.resize(static_cast<std::size_t>(p) + 1);
  for (int k = 0; k <= p; ++k) {
    double s = 0.0;
    for (double g : cb.lag[static_cast<std::size_t>(k)]) s += g;
    acov.lags[static_cast<std::size_t>(k)] =
        s / static_cast<double>(m - static_cast<std::size_t>(k));
  }
  acov.lags[0] = std::max(0.0, acov.lags[0]);
  return acov;
}

AutocovSequence autocovariances(const DifferencedSeries& series, int p) {
  return autocovariances(series.operators, p);
}

Eigen::VectorXd yule_walker(const AutocovSequence& acov) {
  const int p = acov.order();
  if (p < 1) throw DomainError("yule_walker needs order >= 1");
  const Eigen::MatrixXd T = acov.toeplitz();
  Eigen::VectorXd rhs(p);
  for (int k = 1; k <= p; ++k) rhs[k - 1] = acov.lags[static_cast<std::size_t>(k)];

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(p - 1);
  if (smin <= 0.0 || smax / smin > kConditionLimit)
    throw DegenerateError("degenerate autocovariance: Toeplitz condition " +
                          std::to_string(smin > 0 ? smax / smin
                                                  : std::numeric_limits<double>::infinity()));

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(T);
  Eigen::VectorXd alpha = lu.solve(rhs);
  alpha += lu.solve(rhs - T * alpha);  // one refinement step
  return alpha;
}

StationarityDiagnostic check_stationarity(std::span<const double> alphas) {
  int q = static_cast<int>(alphas.size());
  while (q > 0 && alphas[static_cast<std::size_t>(q) - 1] == 0.0) --q;
  if (q == 0)
    return StationarityDiagnostic{true,
                                  std::numeric_limits<double>::infinity()};
  // Roots of phi(z) through w = 1/z: w^q - a_1 w^{q-1} - ... - a_q = 0,
  // so min |z| = 1 / max |w| over companion-matrix eigenvalues.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(q, q);
  for (int j = 0; j < q; ++j) C(0, j) = alphas[static_cast<std::size_t>(j)];
  for (int i = 1; i < q; ++i) C(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  double wmax = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    wmax = std::max(wmax, std::abs(es.eigenvalues()[i]));
  if (wmax == 0.0)
    return StationarityDiagnostic{true,
                                  std::numeric_limits<double>::infinity()};
  return StationarityDiagnostic{1.0 / wmax > 1.0, 1.0 / wmax};
}

PsiWeights psi_weights(std::span<const double> alphas, int max_truncation) {
  const auto diag = check_stationarity(alphas);
  if (!diag.stationary)
    throw StationarityError(
        "psi weights require stationary coefficients (min root modulus " +
        std::to_string(diag.min_root_modulus) + ")");
  const int p = static_cast<int>(alphas.size());
  PsiWeights out;
  out.alphas.assign(alphas.begin(), alphas.end());
  out.psi.push_back(1.0);
  constexpr double kTail = 1e-12;
  for (int j = 1; j <= max_truncation; ++j) {
    double v = 0.0;
    for (int i = 1; i <= std::min(j, p); ++i)
      v += alphas[static_cast<std::size_t>(i) - 1] *
           out.psi[static_cast<std::size_t>(j - i)];
    out.psi.push_back(v);
    // A single small value can be a zero crossing; require a full window
    // of the recursion depth below tolerance before truncating.
    if (j >= p) {
      bool settled = true;
      for (int i = 0; i <= p && settled; ++i)
        settled = std::abs(out.psi[static_cast<std::size_t>(j - i)]) < kTail;
      if (settled) break;
    }
  }
  out.truncation = static_cast<int>(out.psi.size()) - 1;
  return out;
}

double kappa_weight(const PsiWeights& psi, int u) {
  u = std::abs(u);
  double s = 0.0;
  for (int i = 0; i + u <= psi.truncation; ++i)
    s += psi.at(i) * psi.at(i + u);
  return s;
}

double gamma_huv(int h, int u, int v, const PsiWeights& psi,
                 const InnovationMoments& mom) {
  double quartic = 0.0;
  const int lo = std::max(0, -h);
  const int hi = std::min(psi.truncation,
                          std::min(psi.truncation - u, psi.truncation - h));
  for (int i = lo; i <= hi; ++i)
    quartic += psi.at(i) * psi.at(i + u) * psi.at(i + h) * psi.at(i + h + v);
  const double fourth = mom.m2 - mom.m1 * mom.m1 - 2.0 * mom.c2;
  return fourth * quartic +
         mom.m1 * mom.m1 * kappa_weight(psi, u) * kappa_weight(psi, v) +
         mom.c2 * (kappa_weight(psi, h) * kappa_weight(psi, h + v - u) +
                   kappa_weight(psi, h + v) * kappa_weight(psi, h - u));
}

AsymptoticCovariance asymptotic_covariance(const PsiWeights& psi,
                                           const InnovationMoments& mom,
                                           int p, int h_max) {
  if (h_max < 0) h_max = 2 * std::max(1, psi.truncation);
  const double fourth = mom.m2 - mom.m1 * mom.m1 - 2.0 * mom.c2;

  std::vector<double> kap(static_cast<std::size_t>(h_max + p) + 2, 0.0);
  for (int u = 0; u < static_cast<int>(kap.size()); ++u)
    kap[static_cast<std::size_t>(u)] = kappa_weight(psi, u);
  auto kapat = [&](int u) {
    u = std::abs(u);
    return u < static_cast<int>(kap.size()) ? kap[static_cast<std::size_t>(u)]
                                            : 0.0;
  };

  // Summand with the product of means lambda_u lambda_v = m1^2 k(u) k(v)
  // removed; the raw Gamma^h carries that constant term and would not be
  // summable over h.
  auto increment = [&](int h, int u, int v) {
    double quartic = 0.0;
    const int lo = std::max(0, -h);
    const int hi = std::min(psi.truncation,
                            std::min(psi.truncation - u, psi.truncation - h));
    for (int i = lo; i <= hi; ++i)
      quartic += psi.at(i) * psi.at(i + u) * psi.at(i + h) * psi.at(i + h + v);
    return fourth * quartic +
           mom.c2 * (kapat(h) * kapat(h + v - u) + kapat(h + v) * kapat(h - u));
  };

  double tail = 0.0;
  for (int u = 0; u <= p; ++u)
    for (int v = 0; v <= p; ++v)
      tail = std::max({tail, std::abs(increment(h_max, u, v)),
                       std::abs(increment(-h_max, u, v))});
  if (tail >= 1e-12)
    throw ConvergenceError("asymptotic covariance truncation tail " +
                               std::to_string(tail) + " above 1e-12",
                           tail);

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int u = 0; u <= p; ++u)
    for (int v = 0; v <= p; ++v) {
      double s = 0.0;
      for (int h = -h_max; h <= h_max; ++h) s += increment(h, u, v);
      V(u, v) = s;
    }
  V = 0.5 * (V + V.transpose()).eval();
  return AsymptoticCovariance{std::move(V), mom, psi.truncation, h_max};
}

namespace {

SkewOperator centered_op(const SkewOperator& r, const SkewOperator& mu) {
  return lincomb({WeightedTerm{1.0, &r}, WeightedTerm{-1.0, &mu}});
}

std::vector<double> residual_hs_norms(const CenteredBand& cb,
                                      std::span<const double> alphas) {
  const int p = static_cast<int>(alphas.size());
  std::vector<double> coef(static_cast<std::size_t>(p) + 1);
  coef[0] = 1.0;
  for (int i = 1; i <= p; ++i)
    coef[static_cast<std::size_t>(i)] = -alphas[static_cast<std::size_t>(i) - 1];
  std::vector<double> out;
  for (std::size_t t = static_cast<std::size_t>(p); t < cb.n; ++t) {
    double q = 0.0;
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        q += coef[static_cast<std::size_t>(i)] *
             coef[static_cast<std::size_t>(j)] *
             cb.at(t - static_cast<std::size_t>(i),
                   t - static_cast<std::size_t>(j));
    out.push_back(std::sqrt(std::max(0.0, q)));
  }
  return out;
}

}  // namespace

FitResult fit_detailed(std::span<const SpherePoint> points, int p,
                       Variant variant) {
  if (p < 1) throw DomainError("model order must be >= 1");
  if (points.size() <= static_cast<std::size_t>(p) + 1)
    throw DomainError("need more than p + 1 = " + std::to_string(p + 1) +
                      " observations, got " + std::to_string(points.size()));
  DifferencedSeries series = build_differenced_series(points, variant);
  const std::size_t m = series.operators.size();
  if (m <= static_cast<std::size_t>(p))
    throw DomainError("differenced series too short for order " +
                      std::to_string(p));

  const CenteredBand cb = centered_band(series.operators, p);
  AutocovSequence acov;
  acov.n = m;
  acov.lags.resize(static_cast<std::size_t>(p) + 1);
  for (int k = 0; k <= p; ++k) {
    double s = 0.0;
    for (double g : cb.lag[static_cast<std::size_t>(k)]) s += g;
    acov.lags[static_cast<std::size_t>(k)] =
        s / static_cast<double>(m - static_cast<std::size_t>(k));
  }
  acov.lags[0] = std::max(0.0, acov.lags[0]);

  const Eigen::VectorXd alpha = yule_walker(acov);
  std::vector<double> alphas(alpha.begin(), alpha.end());

  std::vector<SkewOperator> history;
  history.reserve(static_cast<std::size_t>(p));
  for (std::size_t t = m - static_cast<std::size_t>(p); t < m; ++t)
    history.push_back(centered_op(series.operators[t], cb.mean_op));

  SarModel model{variant,
                 p,
                 alphas,
                 cb.mean_op,
                 series.base,
                 series.last_observation,
                 std::move(history),
                 check_stationarity(alphas),
                 residual_hs_norms(cb, alphas)};
  return FitResult{std::move(model), std::move(series), std::move(acov)};
}

SarModel fit(std::span<const SpherePoint> points, int p, Variant variant) {
  return fit_detailed(points, p, variant).model;
}

SkewOperator predict_operator(const SarModel& model) {
  if (static_cast<int>(model.history.size()) != model.p)
    throw DomainError("model history has " +
                      std::to_string(model.history.size()) +
                      " entries, expected " + std::to_string(model.p));
  std::vector<WeightedTerm> terms;
  terms.reserve(static_cast<std::size_t>(model.p) + 1);
  terms.emplace_back(1.0, &model.mean_op);
  // history is in time order; alpha_i multiplies R_{n+1-i} - mu.
  for (int i = 1; i <= model.p; ++i)
    terms.emplace_back(model.alphas[static_cast<std::size_t>(i) - 1],
                       &model.history[model.history.size() -
                                      static_cast<std::size_t>(i)]);
  SkewOperator pred = lincomb(terms);
  SkewOperator packed = compress(pred);
  return packed.atoms.size() <= pred.atoms.size() ? packed : pred;
}

PredictionResult predict(const SarModel& model, Projection projection) {
  const SkewOperator op = predict_operator(model);
  const SpherePoint& origin =
      model.variant == Variant::Sar ? model.base : model.last_observation;
  switch (projection) {
    case Projection::None:
      return PredictionResult{rotate(op, origin), projection, false, 1.0};
    case Projection::Proj1: {
      Proj1Result r = project1(origin, op);
      return PredictionResult{std::move(r.point), projection, r.c1 < 1.0,
                              r.c1};
    }
    case Projection::Proj2: {
      const AmbientVector rotated = rotate_vector(op, origin.v);
      const bool clipped = (rotated.values.array() < 0.0).any();
      return PredictionResult{project2(rotated), projection, clipped, 1.0};
    }
  }
  throw DomainError("unreachable projection");
}

SpherePoint predict_point(const SarModel& model, Projection projection) {
  return predict(model, projection).point;
}

Proj1Result project1(const SpherePoint& x, const SkewOperator& L) {
  if ((x.v.values.array() < -kOrthantTol).any())
    throw DomainError("project1 requires a point in the nonnegative orthant");
  if (L.is_zero()) return Proj1Result{x, 1.0};

  // Restrict once to the atom span; each candidate c then costs one
  // small-matrix exponential plus a d x k product.
  const Eigen::MatrixXd B = detail::atom_span_basis(L);
  const Eigen::Index k = B.cols();
  Eigen::MatrixXd A(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const AmbientVector lq = apply(L, AmbientVector{B.col(j), L.weights});
    for (Eigen::Index i = 0; i < k; ++i)
      A(i, j) =
          (B.col(i).array() * lq.values.array() * L.weights->array()).sum();
  }
  A = 0.5 * (A - A.transpose()).eval();
  const Eigen::VectorXd coords =
      B.transpose() * L.weights->cwiseProduct(x.v.values);

  auto rotated = [&](double c) {
    const Eigen::MatrixXd E = detail::expm_small_skew(c * A);
    Vec out = x.v.values +
              B * ((E - Eigen::MatrixXd::Identity(k, k)) * coords);
    return out;
  };
  auto feasible = [&](double c) {
    return (rotated(c).array() >= -kOrthantTol).all();
  };

  if (feasible(1.0))
    return Proj1Result{SpherePoint::normalized(
                           AmbientVector{rotated(1.0), x.v.weights}),
                       1.0};

  // The feasible set need not be an interval, so scan from 1 downward for
  // the last feasible cell, then bisect inside it.
  constexpr int kGrid = 256;
  double lo = 0.0, hi = 1.0;
  for (int i = kGrid - 1; i >= 0; --i) {
    const double c = static_cast<double>(i) / kGrid;
    if (c == 0.0 || feasible(c)) {
      lo = c;
      hi = static_cast<double>(i + 1) / kGrid;
      break;
    }
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return Proj1Result{
      SpherePoint::normalized(AmbientVector{rotated(lo), x.v.weights}), lo};
}

SpherePoint project2(const AmbientVector& x_rot) {
  Vec clipped = x_rot.values.cwiseMax(0.0);
  const double n = norm(AmbientVector{clipped, x_rot.weights});
  if (n < 1e-300)
    throw DegenerateError("projection degenerate: clipped vector is zero");
  clipped /= n;
  return SpherePoint(AmbientVector{std::move(clipped), x_rot.weights});
}

InnovationMoments estimate_innovation_moments(const DifferencedSeries& series,
                                              const SarModel& model) {
  const int p = model.p;
  const std::size_t m = series.operators.size();
  if (m < static_cast<std::size_t>(p) + 3)
    throw DomainError("series too short to estimate innovation moments");
  const CenteredBand cb = centered_band(series.operators, p + 1);
  std::vector<double> coef(static_cast<std::size_t>(p) + 1);
  coef[0] = 1.0;
  for (int i = 1; i <= p; ++i)
    coef[static_cast<std::size_t>(i)] =
        -model.alphas[static_cast<std::size_t>(i) - 1];

  auto eps_inner = [&](std::size_t t, std::size_t s) {
    double q = 0.0;
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        q += coef[static_cast<std::size_t>(i)] *
             coef[static_cast<std::size_t>(j)] *
             cb.at(t - static_cast<std::size_t>(i),
                   s - static_cast<std::size_t>(j));
    return q;
  };

  double m1 = 0.0, m2 = 0.0, c2 = 0.0;
  std::size_t count = 0;
  for (std::size_t t = static_cast<std::size_t>(p); t < m; ++t) {
    const double e = std::max(0.0, eps_inner(t, t));
    m1 += e;
    m2 += e * e;
    ++count;
  }
  m1 /= static_cast<double>(count);
  m2 /= static_cast<double>(count);
  std::size_t pairs = 0;
  for (std::size_t t = static_cast<std::size_t>(p); t + 1 < m; ++t) {
    const double e = eps_inner(t, t + 1);
    c2 += e * e;
    ++pairs;
  }
  c2 /= static_cast<double>(pairs);
  return InnovationMoments{m1, m2, c2};
}

namespace {

nlohmann::json point_to_json(const SpherePoint& x) {
  return nlohmann::json{
      {"values", std::vector<double>(x.v.values.begin(), x.v.values.end())},
      {"weights",
       std::vector<double>(x.v.weights->begin(), x.v.weights->end())}};
}

SpherePoint point_from_json(const nlohmann::json& j) {
  const auto vv = j.at("values").get<std::vector<double>>();
  const auto wv = j.at("weights").get<std::vector<double>>();
  if (vv.size() != wv.size())
    throw FormatError("sphere point values/weights length mismatch");
  Vec v = Eigen::Map<const Vec>(vv.data(), static_cast<Eigen::Index>(vv.size()));
  Vec w = Eigen::Map<const Vec>(wv.data(), static_cast<Eigen::Index>(wv.size()));
  return SpherePoint(ambient(std::move(v), make_weights(std::move(w))));
}

}  // namespace

nlohmann::json model_to_json(const SarModel& model) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& op : model.history) hist.push_back(op);
  // JSON has no infinity; an absent key stands for an all-zero polynomial.
  nlohmann::json diag{{"stationary", model.stationarity.stationary},
                      {"residual_norms", model.residual_norms}};
  if (std::isfinite(model.stationarity.min_root_modulus))
    diag["min_root_modulus"] = model.stationarity.min_root_modulus;
  return nlohmann::json{
      {"format", kModelFormatTag},
      {"variant", to_string(model.variant)},
      {"p", model.p},
      {"alphas", model.alphas},
      {"mean_op", model.mean_op},
      {"base", point_to_json(model.base)},
      {"last_observation", point_to_json(model.last_observation)},
      {"history", std::move(hist)},
      {"diagnostics", std::move(diag)}};
}

SarModel model_from_json(const nlohmann::json& j) {
  const std::string tag = j.value("format", "");
  if (tag != kModelFormatTag)
    throw ModelVersionError("unsupported model format '" + tag +
                            "', expected " + std::string(kModelFormatTag));
  std::vector<SkewOperator> history;
  for (const auto& jh : j.at("history"))
    history.push_back(jh.get<SkewOperator>());
  const auto& jd = j.at("diagnostics");
  SarModel model{variant_from_string(j.at("variant").get<std::string>()),
                 j.at("p").get<int>(),
                 j.at("alphas").get<std::vector<double>>(),
                 j.at("mean_op").get<SkewOperator>(),
                 point_from_json(j.at("base")),
                 point_from_json(j.at("last_observation")),
                 std::move(history),
                 StationarityDiagnostic{
                     jd.at("stationary").get<bool>(),
                     jd.contains("min_root_modulus") &&
                             jd.at("min_root_modulus").is_number()
                         ? jd.at("min_root_modulus").get<double>()
                         : std::numeric_limits<double>::infinity()},
                 jd.at("residual_norms").get<std::vector<double>>()};
  if (static_cast<int>(model.alphas.size()) != model.p)
    throw FormatError("model alphas length does not match order p");
  return model;
}

}  // namespace spherear
