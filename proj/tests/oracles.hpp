// Test-only oracles, kept independent of the library code paths they
// check: dense matrix realizations of skew operators, truncated series
// exponentials, quadrature references, classical Bartlett covariances
// and a winding-number polynomial root locator.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "spherear/simulate.hpp"
#include "spherear/skew.hpp"

namespace oracle {

// Coordinate matrix M with M y = sum_m c_m (<a_m,y> b_m - <b_m,y> a_m).
inline Eigen::MatrixXd dense_matrix(const spherear::SkewOperator& L) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(L.dim, L.dim);
  const Eigen::VectorXd& w = *L.weights;
  for (const auto& atom : L.atoms) {
    const Eigen::VectorXd wa = w.cwiseProduct(atom.a);
    const Eigen::VectorXd wb = w.cwiseProduct(atom.b);
    M += atom.coef * (atom.b * wa.transpose() - atom.a * wb.transpose());
  }
  return M;
}

// Weighted Hilbert-Schmidt inner product of the operator kernels:
// sum_{s,t} w_s w_t K1(s,t) K2(s,t) with K = M diag(1/w).
inline double dense_hs_inner(const spherear::SkewOperator& L1,
                             const spherear::SkewOperator& L2) {
  const Eigen::VectorXd& w = *L1.weights;
  const Eigen::MatrixXd K1 =
      dense_matrix(L1) * w.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd K2 =
      dense_matrix(L2) * w.cwiseInverse().asDiagonal();
  double s = 0.0;
  for (Eigen::Index i = 0; i < K1.rows(); ++i)
    for (Eigen::Index j = 0; j < K1.cols(); ++j)
      s += w[i] * w[j] * K1(i, j) * K2(i, j);
  return s;
}

// Plain truncated exponential series sum_{l<=terms} M^l / l!.
inline Eigen::MatrixXd series_expm(const Eigen::MatrixXd& M, int terms = 60) {
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::MatrixXd sum = term;
  for (int l = 1; l <= terms; ++l) {
    term = (term * M) / static_cast<double>(l);
    sum += term;
  }
  return sum;
}

// Classical Bartlett limit covariance of sample autocovariances of a
// linear process with autocovariances gamma and scalar innovation
// moments (eta = E z^4 / sigma^4):
//   W_{uv} = (eta - 3) gamma_u gamma_v
//            + sum_k [ gamma_k gamma_{k-u+v} + gamma_{k+v} gamma_{k-u} ].
inline Eigen::MatrixXd bartlett_cov(const std::vector<double>& gamma_abs,
                                    double eta, int p) {
  auto gamma = [&](int k) {
    k = std::abs(k);
    return k < static_cast<int>(gamma_abs.size())
               ? gamma_abs[static_cast<std::size_t>(k)]
               : 0.0;
  };
  const int K = static_cast<int>(gamma_abs.size()) + p + 1;
  Eigen::MatrixXd W(p + 1, p + 1);
  for (int u = 0; u <= p; ++u)
    for (int v = 0; v <= p; ++v) {
      double s = (eta - 3.0) * gamma(u) * gamma(v);
      for (int k = -K; k <= K; ++k)
        s += gamma(k) * gamma(k - u + v) + gamma(k + v) * gamma(k - u);
      W(u, v) = s;
    }
  return W;
}

// Smallest root modulus of phi(z) = 1 - a_1 z - ... - a_p z^p located by
// bisection on the radius, counting roots inside |z| = r through the
// winding number of phi on the circle.
inline double min_root_modulus_winding(const std::vector<double>& alphas,
                                       double r_hi = 64.0) {
  auto phi = [&](std::complex<double> z) {
    std::complex<double> v(1.0, 0.0);
    std::complex<double> zp(1.0, 0.0);
    for (double a : alphas) {
      zp *= z;
      v -= a * zp;
    }
    return v;
  };
  auto roots_inside = [&](double r) {
    const int n = 200000;
    double winding = 0.0;
    double prev = std::arg(phi(std::complex<double>(r, 0.0)));
    for (int i = 1; i <= n; ++i) {
      const double t = 2.0 * M_PI * i / n;
      const double cur = std::arg(phi(std::polar(r, t)));
      double d = cur - prev;
      while (d > M_PI) d -= 2.0 * M_PI;
      while (d < -M_PI) d += 2.0 * M_PI;
      winding += d;
      prev = cur;
    }
    return static_cast<int>(std::lround(winding / (2.0 * M_PI)));
  };
  double lo = 1e-6, hi = r_hi;
  if (roots_inside(hi) == 0) return std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60 && hi - lo > 1e-9 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (roots_inside(mid) == 0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Trapezoid quadrature of integral sqrt(f g) for two univariate normal
// densities; the Fisher-Rao distance is arccos of the result.
inline double normal_bhattacharyya(double mu1, double s1, double mu2,
                                   double s2) {
  const double lo = std::min(mu1 - 10.0 * s1, mu2 - 10.0 * s2);
  const double hi = std::max(mu1 + 10.0 * s1, mu2 + 10.0 * s2);
  const int n = 400000;
  const double h = (hi - lo) / n;
  auto pdf = [](double x, double mu, double s) {
    const double z = (x - mu) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
  };
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double v = std::sqrt(pdf(x, mu1, s1) * pdf(x, mu2, s2));
    acc += (i == 0 || i == n) ? 0.5 * v : v;
  }
  return acc * h;
}

// Deterministic pseudo-random helpers built on the library RNG but used
// only to generate test fixtures.
inline Eigen::VectorXd random_vector(spherear::CounterRng& rng,
                                     Eigen::Index d) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.gaussian();
  return v;
}

inline spherear::SpherePoint random_sphere_point(spherear::CounterRng& rng,
                                                 const spherear::Weights& w) {
  return spherear::SpherePoint::normalized(
      spherear::ambient(random_vector(rng, w->size()), w));
}

}  // namespace oracle
