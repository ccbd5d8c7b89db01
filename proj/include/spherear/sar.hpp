#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

#include "spherear/skew.hpp"

namespace spherear {

enum class Variant { Sar, Dsar };
enum class Projection { None, Proj1, Proj2 };

std::string to_string(Variant v);
std::string to_string(Projection p);
Variant variant_from_string(const std::string& s);
Projection projection_from_string(const std::string& s);

/// Rotation-differenced view of a spherical time series.
/// SAR:  operators[t] = x_t (-) mu_x with base = Frechet mean.
/// DSAR: operators[t] = x_{t+1} (-) x_t, one fewer than observations.
struct DifferencedSeries {
  Variant variant;
  std::vector<SkewOperator> operators;
  SpherePoint base;
  SpherePoint last_observation;
};

DifferencedSeries build_differenced_series(
    std::span<const SpherePoint> points, Variant variant);

/// Sample autocovariances lambda_0..lambda_p of the centered operator
/// series, divisor n-k, together with the sample count.
struct AutocovSequence {
  std::vector<double> lags;
  std::size_t n = 0;

  int order() const { return static_cast<int>(lags.size()) - 1; }
  Eigen::MatrixXd toeplitz() const;  // p x p matrix from lambda_0..lambda_{p-1}
};

// Banded centered Gram <R_t - mu, R_s - mu> for |t - s| <= band, computed
// through the double-centering identity so only O(n * band) operator
// inner products are needed. mean_op is the sample mean (1/n) sum R_t.
struct CenteredBand {
  std::size_t n = 0;
  int band = 0;
  std::vector<std::vector<double>> lag;  // lag[k][t] = G(t, t+k)
  SkewOperator mean_op;

  double at(std::size_t t, std::size_t s) const;
};

CenteredBand centered_band(std::span<const SkewOperator> ops, int band);

AutocovSequence autocovariances(std::span<const SkewOperator> ops, int p);
AutocovSequence autocovariances(const DifferencedSeries& series, int p);

// Yule-Walker estimate: solves the Toeplitz system
// (alpha_1..alpha_p) = Lambda^{-1} (lambda_1..lambda_p).
// Throws DegenerateError when Lambda is singular or has condition
// number above 1e12.
Eigen::VectorXd yule_walker(const AutocovSequence& acov);

struct StationarityDiagnostic {
  bool stationary = true;
  double min_root_modulus = 0.0;  // +inf for the zero polynomial
};

// Roots of phi(z) = 1 - alpha_1 z - ... - alpha_p z^p via companion
// matrix eigenvalues; stationary iff all roots lie outside the unit
// circle.
StationarityDiagnostic check_stationarity(std::span<const double> alphas);

/// MA(infinity) weights of 1/phi(z), truncated at index m or once the
/// recursion tail falls below 1e-12.
struct PsiWeights {
  std::vector<double> psi;      // psi_0..psi_m, psi_0 = 1
  int truncation = 0;           // m
  std::vector<double> alphas;

  double at(int i) const {
    return (i < 0 || i > truncation) ? 0.0 : psi[static_cast<std::size_t>(i)];
  }
};

PsiWeights psi_weights(std::span<const double> alphas, int max_truncation = 200);

// kappa(u) = sum_i psi_i psi_{i+u}, symmetric in u.
double kappa_weight(const PsiWeights& psi, int u);

/// Scalar moments of the innovation operators:
/// m1 = E<e,e>, m2 = E<e,e>^2, c2 = E<e1,e2>^2.
struct InnovationMoments {
  double m1 = 0.0;
  double m2 = 0.0;
  double c2 = 0.0;
};

// The three-term expectation
//   Gamma^h_{u,v} = E[<R_t - mu, R_{t+u} - mu><R_{t+h} - mu, R_{t+h+v} - mu>]
//                 = (m2 - m1^2 - 2 c2) sum_i psi_i psi_{i+u} psi_{i+h} psi_{i+h+v}
//                   + m1^2 kappa(u) kappa(v)
//                   + c2 (kappa(h) kappa(h+v-u) + kappa(h+v) kappa(h-u)).
double gamma_huv(int h, int u, int v, const PsiWeights& psi,
                 const InnovationMoments& moments);

/// Limit covariance of sqrt(n) (lambda_hat - lambda), entries u,v = 0..p.
struct AsymptoticCovariance {
  Eigen::MatrixXd V;
  InnovationMoments moments;
  int psi_truncation = 0;
  int h_max = 0;
};

// V_{u,v} = sum_h (Gamma^h_{u,v} - lambda_u lambda_v) with
// lambda_u = m1 kappa(u); the product of means must be removed for the
// sum over h to converge (it is the covariance, not the raw second
// moment, that Gamma^h feeds). h_max defaults to twice the psi
// truncation; the summand tail at +-h_max must be below 1e-12.
AsymptoticCovariance asymptotic_covariance(const PsiWeights& psi,
                                           const InnovationMoments& moments,
                                           int p, int h_max = -1);

/// Fitted SAR/DSAR model.
struct SarModel {
  Variant variant;
  int p = 0;
  std::vector<double> alphas;
  SkewOperator mean_op;             // mu_hat_R
  SpherePoint base;                 // mu_hat_x (SAR) / first point (DSAR)
  SpherePoint last_observation;
  std::vector<SkewOperator> history;  // last p centered operators, time order
  StationarityDiagnostic stationarity;
  std::vector<double> residual_norms;  // in-sample hs norms of eps_hat_t
};

SarModel fit(std::span<const SpherePoint> points, int p, Variant variant);

/// fit() plus the intermediate artifacts diagnostics are built from.
struct FitResult {
  SarModel model;
  DifferencedSeries series;
  AutocovSequence acov;
};

FitResult fit_detailed(std::span<const SpherePoint> points, int p,
                       Variant variant);

// One-step operator prediction
// R_hat = mu_hat + alpha_1 (R_n - mu_hat) + ... + alpha_p (R_{n-p+1} - mu_hat).
SkewOperator predict_operator(const SarModel& model);

struct PredictionResult {
  SpherePoint point;
  Projection projection = Projection::None;
  bool projection_fired = false;  // Proj1 truncated / Proj2 clipped
  double c1 = 1.0;                // rotation fraction when Proj1 is used
};

PredictionResult predict(const SarModel& model, Projection projection);
SpherePoint predict_point(const SarModel& model, Projection projection);

struct Proj1Result {
  SpherePoint point;
  double c1 = 1.0;
};

// Rotate-to-boundary projection: exp(c1 L) x with
// c1 = sup { c in [0,1] : exp(c L) x componentwise >= 0 }, located by a
// descending grid scan plus bisection to 1e-10. Requires x in H+.
Proj1Result project1(const SpherePoint& x, const SkewOperator& L);

// Nearest point of H+: componentwise clip at zero, then renormalized to
// unit norm. Throws DegenerateError when the clipped vector vanishes.
SpherePoint project2(const AmbientVector& x_rot);

// Scalar innovation moments estimated from the in-sample residuals
// eps_hat_t = (R_t - mu) - sum_i alpha_i (R_{t-i} - mu); c2 uses
// consecutive distinct pairs.
InnovationMoments estimate_innovation_moments(const DifferencedSeries& series,
                                              const SarModel& model);

inline constexpr const char* kModelFormatTag = "sar-model/1";

nlohmann::json model_to_json(const SarModel& model);
SarModel model_from_json(const nlohmann::json& j);

}  // namespace spherear
