#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <vector>

#include "spherear/sar.hpp"

namespace spherear {

/// Counter-based generator (SplitMix64 update): the state advances by a
/// fixed increment and the output is a bijective mix of it, so streams
/// keyed by (seed, stream index) are independent and reproducible
/// regardless of interleaving.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(seed) {}
  static CounterRng keyed(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform01();   // open interval (0,1)
  double gaussian();    // standard normal via Box-Muller, pair cached

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// Law of the i.i.d. innovation operators: independent N(0, sigma^2)
/// coefficients on the basis atoms e_i (x) e_j - e_j (x) e_i with
/// 1 <= i < j <= active, embedded in a dim-dimensional space. The basis
/// vectors are coordinate indicators normalized under the space weights.
struct InnovationSpec {
  Eigen::Index dim = 2;
  int active = 2;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  Weights weights;  // defaults to all-ones when empty
};

SkewOperator sample_innovation(const InnovationSpec& spec, CounterRng& rng);

// Exact scalar moments of the innovation law: with K = active(active-1)/2
// atoms, <e,e> = 2 sigma^2 chi^2_K, so m1 = 2 sigma^2 K,
// m2 = 4 sigma^4 (K^2 + 2K) and c2 = E<e1,e2>^2 = 4 sigma^4 K.
InnovationMoments innovation_moments(const InnovationSpec& spec);

/// Forward simulation of the operator autoregression pushed onto the
/// sphere (SAR rotates the base each step, DSAR the previous point).
struct SimulationRun {
  Variant variant = Variant::Sar;
  std::vector<double> alphas;
  SkewOperator mean_op;  // mu_R; zero operator for none
  SpherePoint base;
  int length = 0;
  int burn_in = -1;  // default 50 * max(p,1)
  std::uint64_t seed = 0;
  InnovationSpec innovations;
  bool force_nonstationary = false;
  bool keep_innovations = false;
};

struct SimulationResult {
  std::vector<SpherePoint> points;
  std::vector<SkewOperator> operators;    // R_t driving each step
  std::vector<SkewOperator> innovations;  // only when keep_innovations
};

SimulationResult simulate_sar(const SimulationRun& run);

struct NormalityStat {
  int lag = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double jarque_bera = 0.0;
};

struct CltParams {
  std::vector<double> alphas;
  InnovationSpec innovations;
  int lags = -1;      // defaults to alphas.size()
  int burn_in = -1;   // defaults to 50 * max(p,1)
  std::uint64_t seed = 0;
  int threads = 0;    // 0: SPHEREAR_THREADS or hardware concurrency
};

/// Monte Carlo check of the lambda-hat central limit theorem: empirical
/// covariance of sqrt(n) (lambda_hat - lambda) across replicates against
/// the formula V, plus per-lag normality statistics. When alphas fit an
/// order-p model, the empirical covariance of sqrt(n) (alpha_hat - alpha)
/// is reported as well.
struct MonteCarloReport {
  Eigen::MatrixXd empirical_cov;
  Eigen::MatrixXd theoretical_V;
  Eigen::MatrixXd relative_diff;  // |emp - V| / (|V| + eps)
  std::vector<double> lambda_true;
  std::vector<NormalityStat> normality;
  Eigen::MatrixXd alpha_cov;      // empirical, p x p (empty when p = 0)
  std::vector<double> alpha_mean;
  int replicates = 0;
  int n = 0;
};

MonteCarloReport monte_carlo_lambda_clt(const CltParams& params,
                                        int replicates, int n);

nlohmann::json report_to_json(const MonteCarloReport& report,
                              const CltParams& params);

// Parallelism cap: SPHEREAR_THREADS when set, otherwise the hardware
// concurrency (at least 1).
int resolve_threads(int requested);

}  // namespace spherear
