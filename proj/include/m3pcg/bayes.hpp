#pragma once

// Completion-rate comparison under a Bernoulli likelihood with a uniform prior,
// and an ordered-logistic rating model with a Cauchy(0, 2.5) prior on the group
// coefficient, fitted by adaptive random-walk Metropolis-within-Gibbs.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace m3pcg::bayes {

struct BetaPosterior {
  double alpha = 1.0;
  double beta = 1.0;
  double mean() const { return alpha / (alpha + beta); }
};

// Conjugate update of the uniform prior: Beta(1 + successes, 1 + failures).
BetaPosterior bernoulli_posterior(long long successes, long long trials);

double beta_log_density(const BetaPosterior& p, double x);

struct MonteCarlo {
  long long draws = 100'000;
  std::uint64_t seed = 1;
};

struct NumericIntegration {
  int grid = 20'000;
};

using ComparisonMethod = std::variant<MonteCarlo, NumericIntegration>;

inline constexpr long long kMinMonteCarloDraws = 1'000;
inline constexpr int kMinGrid = 200;

struct ProbabilityEstimate {
  double p = 0.0;
  double error = 0.0;  // MCSE for Monte Carlo, discretization bound for the grid
};

// P(theta_a > theta_b) for independent posteriors.
ProbabilityEstimate prob_greater(const BetaPosterior& a, const BetaPosterior& b, const ComparisonMethod& method);

// log P(y = k | eta, c) for categories k = 1..K with K = c.size() + 1.
// Throws std::invalid_argument unless c is strictly increasing and k in range.
double ordered_logistic_log_pmf(int k, double eta, std::span<const double> cutpoints);

// sqrt(p(1-p)/n) for independent draws.
double mcse(double p, long long n_draws);

// Batch-means Monte Carlo standard error of the mean of a (possibly
// autocorrelated) series; batch length floor(sqrt(n)).
double mcse_batch_means(std::span<const double> series);

// As above, pooling equal-length chains.
double mcse_batch_means(const std::vector<std::vector<double>>& chains);

struct RatingsDataset {
  std::vector<int> y;  // ordinal categories, lowest = min_category
  std::vector<int> x;  // 0 = traditional, 1 = llm
  int min_category = 1;
  int max_category = 5;

  int num_categories() const { return max_category - min_category + 1; }
  void check() const;
};

struct SamplerConfig {
  int chains = 4;
  int draws = 10'000;  // per chain, after burn-in
  int burn_in = 2'000;
  std::uint64_t seed = 20240101;
  int min_total_draws = 1'000;
  double prior_scale = 2.5;
};

struct ProbStatement {
  std::string claim;
  double p = 0.0;
  double mcse = 0.0;
};

struct OrderedLogisticPosterior {
  std::vector<double> beta_samples;                  // chains concatenated
  std::vector<std::vector<double>> cutpoint_samples;  // one strictly increasing vector per draw
  int chains = 0;
  double acceptance_rate = 0.0;
  double beta_mean = 0.0;
  double beta_sd = 0.0;
  ProbStatement beta_positive;
  ProbStatement beta_negative;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat prior on ordered cutpoints, sampled as (c_1, log differences) with the
// matching Jacobian. Throws ConvergenceError when the post-adaptation acceptance
// rate leaves [0.05, 0.95].
OrderedLogisticPosterior fit_ordered_logistic(const RatingsDataset& data, const SamplerConfig& config = {});

// Unnormalized log posterior in the sampler's coordinates
// (beta, c_1, log(c_2 - c_1), ...). Exposed for testing.
double ordered_logistic_log_posterior(std::span<const double> theta, const RatingsDataset& data, double prior_scale);

}  // namespace m3pcg::bayes
