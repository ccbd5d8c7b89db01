#include "spherear/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <numbers>
#include <thread>

namespace spherear {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

}  // namespace

CounterRng CounterRng::keyed(std::uint64_t seed, std::uint64_t stream) {
  return CounterRng(mix64(seed + kGamma * (stream + 1)));
}

std::uint64_t CounterRng::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double CounterRng::uniform01() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

namespace {

Weights spec_weights(const InnovationSpec& spec) {
  return spec.weights ? spec.weights : unit_weights(spec.dim);
}

// Normalized coordinate indicator: e_i / sqrt(w_i), unit under the
// weighted inner product.
Vec unit_coord(Eigen::Index i, Eigen::Index dim, const Vec& w) {
  Vec e = Vec::Zero(dim);
  e[i] = 1.0 / std::sqrt(w[i]);
  return e;
}

}  // namespace

SkewOperator sample_innovation(const InnovationSpec& spec, CounterRng& rng) {
  if (spec.active < 2)
    throw DomainError("innovation support needs at least two coordinates");
  if (spec.active > spec.dim)
    throw DomainError("innovation support exceeds the space dimension");
  const Weights w = spec_weights(spec);
  SkewOperator out{spec.dim, w, {}};
  if (spec.sigma == 0.0) return out;
  out.atoms.reserve(
      static_cast<std::size_t>(spec.active) * (spec.active - 1) / 2);
  for (int i = 0; i < spec.active; ++i)
    for (int j = i + 1; j < spec.active; ++j) {
      const double c = spec.sigma * rng.gaussian();
      out.atoms.push_back(SkewAtom{c, unit_coord(i, spec.dim, *w),
                                   unit_coord(j, spec.dim, *w)});
    }
  return out;
}

InnovationMoments innovation_moments(const InnovationSpec& spec) {
  const double K =
      static_cast<double>(spec.active) * (spec.active - 1) / 2.0;
  const double s2 = spec.sigma * spec.sigma;
  const double s4 = s2 * s2;
  return InnovationMoments{2.0 * s2 * K, 4.0 * s4 * (K * K + 2.0 * K),
                           4.0 * s4 * K};
}

namespace {

// Centered AR recursion on operators: C_t = sum_i alpha_i C_{t-i} + eps_t.
// Lincomb handles atom growth; the span stays inside the innovation
// support plus the mean operator, so compression keeps the state small.
class OperatorRecursion {
 public:
  OperatorRecursion(std::span<const double> alphas, Eigen::Index dim,
                    Weights weights)
      : alphas_(alphas.begin(), alphas.end()),
        state_(alphas.size(), SkewOperator::zero(dim, weights)) {}

  SkewOperator step(const SkewOperator& eps) {
    std::vector<WeightedTerm> terms;
    terms.reserve(alphas_.size() + 1);
    for (std::size_t i = 0; i < alphas_.size(); ++i)
      terms.emplace_back(alphas_[i], &state_[i]);
    terms.emplace_back(1.0, &eps);
    SkewOperator next = lincomb(terms);
    if (!state_.empty()) {
      for (std::size_t i = state_.size(); i-- > 1;)
        state_[i] = std::move(state_[i - 1]);
      state_[0] = next;
    }
    return next;
  }

 private:
  std::vector<double> alphas_;
  std::vector<SkewOperator> state_;  // state_[0] = C_{t-1}, ...
};

}  // namespace

SimulationResult simulate_sar(const SimulationRun& run) {
  const int p = static_cast<int>(run.alphas.size());
  const auto diag = check_stationarity(run.alphas);
  if (!diag.stationary && !run.force_nonstationary)
    throw StationarityError(
        "refusing to simulate a non-stationary model (min root modulus " +
        std::to_string(diag.min_root_modulus) + ")");
  if (run.length < 1) throw DomainError("simulation length must be >= 1");
  const int burn = run.burn_in < 0 ? 50 * std::max(p, 1) : run.burn_in;
  if (burn < 10 * p)
    throw DomainError("burn-in must be at least 10 * p");

  InnovationSpec spec = run.innovations;
  spec.dim = run.base.dim();
  if (!spec.weights) spec.weights = run.base.v.weights;

  CounterRng rng = CounterRng::keyed(run.seed, 0);
  OperatorRecursion rec(run.alphas, spec.dim, spec.weights);

  SimulationResult out;
  out.points.reserve(static_cast<std::size_t>(run.length));
  // DSAR produces length points from length-1 transport operators.
  const int steps =
      run.variant == Variant::Sar ? run.length : run.length - 1;
  if (run.variant == Variant::Dsar) out.points.push_back(run.base);
  out.operators.reserve(static_cast<std::size_t>(std::max(steps, 0)));

  SpherePoint current = run.base;
  for (int t = -burn; t < steps; ++t) {
    SkewOperator eps = sample_innovation(spec, rng);
    SkewOperator centered = rec.step(eps);
    if (run.keep_innovations) out.innovations.push_back(eps);
    if (t < 0) continue;
    SkewOperator r =
        lincomb({WeightedTerm{1.0, &centered}, WeightedTerm{1.0, &run.mean_op}});
    if (run.variant == Variant::Sar) {
      out.points.push_back(rotate(r, run.base));
    } else {
      current = rotate(r, current);
      out.points.push_back(current);
    }
    out.operators.push_back(std::move(r));
  }
  return out;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPHEREAR_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

NormalityStat normality_of(int lag, const Eigen::VectorXd& sample) {
  const double n = static_cast<double>(sample.size());
  const double mean = sample.mean();
  const Eigen::ArrayXd c = sample.array() - mean;
  const double var = (c * c).sum() / n;
  const double sd = std::sqrt(var);
  const double skew = (c * c * c).sum() / n / (sd * sd * sd);
  const double kurt = (c * c * c * c).sum() / n / (var * var) - 3.0;
  const double jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
  return NormalityStat{lag, mean, sd, skew, kurt, jb};
}

}  // namespace

MonteCarloReport monte_carlo_lambda_clt(const CltParams& params,
                                        int replicates, int n) {
  if (replicates < 200)
    throw DomainError("monte carlo validation needs at least 200 replicates");
  const int p = static_cast<int>(params.alphas.size());
  const int lags = params.lags < 0 ? std::max(p, 1) : params.lags;
  const int burn = params.burn_in < 0 ? 50 * std::max(p, 1) : params.burn_in;
  if (n <= lags) throw DomainError("series length must exceed the lag count");

  const PsiWeights psi = psi_weights(params.alphas);
  const InnovationMoments mom = innovation_moments(params.innovations);
  std::vector<double> lambda_true(static_cast<std::size_t>(lags) + 1);
  for (int u = 0; u <= lags; ++u)
    lambda_true[static_cast<std::size_t>(u)] = mom.m1 * kappa_weight(psi, u);
  const AsymptoticCovariance theo = asymptotic_covariance(psi, mom, lags);

  InnovationSpec spec = params.innovations;
  if (!spec.weights) spec.weights = unit_weights(spec.dim);

  Eigen::MatrixXd scaled(replicates, lags + 1);
  Eigen::MatrixXd alpha_hat(replicates, p);
  std::vector<int> failed_fits(static_cast<std::size_t>(replicates), 0);

  auto run_replicate = [&](int r) {
    CounterRng rng = CounterRng::keyed(params.seed, static_cast<std::uint64_t>(r));
    OperatorRecursion rec(params.alphas, spec.dim, spec.weights);
    std::vector<SkewOperator> ops;
    ops.reserve(static_cast<std::size_t>(n));
    for (int t = -burn; t < n; ++t) {
      SkewOperator eps = sample_innovation(spec, rng);
      SkewOperator centered = rec.step(eps);
      if (t >= 0) ops.push_back(std::move(centered));
    }
    const AutocovSequence acov = autocovariances(ops, lags);
    for (int k = 0; k <= lags; ++k)
      scaled(r, k) = std::sqrt(static_cast<double>(n)) *
                     (acov.lags[static_cast<std::size_t>(k)] -
                      lambda_true[static_cast<std::size_t>(k)]);
    if (p >= 1) {
      try {
        AutocovSequence head;
        head.n = acov.n;
        head.lags.assign(acov.lags.begin(), acov.lags.begin() + p + 1);
        const Eigen::VectorXd a = yule_walker(head);
        for (int i = 0; i < p; ++i) alpha_hat(r, i) = a[i];
      } catch (const DegenerateError&) {
        failed_fits[static_cast<std::size_t>(r)] = 1;
        for (int i = 0; i < p; ++i) alpha_hat(r, i) = 0.0;
      }
    }
  };

  const int threads = resolve_threads(params.threads);
  if (threads <= 1) {
    for (int r = 0; r < replicates; ++r) run_replicate(r);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int r = w; r < replicates; r += threads) run_replicate(r);
      });
    for (auto& t : pool) t.join();
  }

  MonteCarloReport report;
  report.replicates = replicates;
  report.n = n;
  report.lambda_true = lambda_true;
  report.theoretical_V = theo.V;

  const Eigen::RowVectorXd mean = scaled.colwise().mean();
  const Eigen::MatrixXd centered = scaled.rowwise() - mean;
  report.empirical_cov =
      centered.transpose() * centered / static_cast<double>(replicates - 1);
  report.relative_diff =
      (report.empirical_cov - theo.V).cwiseAbs().array() /
      (theo.V.cwiseAbs().array() + 1e-12);
  for (int k = 0; k <= lags; ++k)
    report.normality.push_back(normality_of(k, scaled.col(k)));

  if (p >= 1) {
    Eigen::MatrixXd a_scaled(replicates, p);
    for (int r = 0; r < replicates; ++r)
      for (int i = 0; i < p; ++i)
        a_scaled(r, i) = std::sqrt(static_cast<double>(n)) *
                         (alpha_hat(r, i) - params.alphas[static_cast<std::size_t>(i)]);
    const Eigen::RowVectorXd am = a_scaled.colwise().mean();
    const Eigen::MatrixXd ac = a_scaled.rowwise() - am;
    report.alpha_cov =
        ac.transpose() * ac / static_cast<double>(replicates - 1);
    report.alpha_mean.resize(static_cast<std::size_t>(p));
    const Eigen::RowVectorXd raw_mean = alpha_hat.colwise().mean();
    for (int i = 0; i < p; ++i)
      report.alpha_mean[static_cast<std::size_t>(i)] = raw_mean[i];
  }
  return report;
}

namespace {

nlohmann::json matrix_rows(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

nlohmann::json report_to_json(const MonteCarloReport& report,
                              const CltParams& params) {
  nlohmann::json normality = nlohmann::json::array();
  for (const auto& s : report.normality)
    normality.push_back({{"lag", s.lag},
                         {"mean", s.mean},
                         {"stddev", s.stddev},
                         {"skewness", s.skewness},
                         {"excess_kurtosis", s.excess_kurtosis},
                         {"jarque_bera", s.jarque_bera}});
  return nlohmann::json{
      {"format", "mc-report/1"},
      {"manifest",
       {{"seed", params.seed},
        {"replicates", report.replicates},
        {"n", report.n},
        {"alphas", params.alphas},
        {"dim", params.innovations.dim},
        {"active", params.innovations.active},
        {"sigma", params.innovations.sigma}}},
      {"lambda_true", report.lambda_true},
      {"empirical_cov", matrix_rows(report.empirical_cov)},
      {"theoretical_V", matrix_rows(report.theoretical_V)},
      {"relative_diff", matrix_rows(report.relative_diff)},
      {"alpha_cov", matrix_rows(report.alpha_cov)},
      {"alpha_mean", report.alpha_mean},
      {"normality", std::move(normality)}};
}

}  // namespace spherear
