#include "m3pcg/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include "m3pcg/rng.hpp"

namespace m3pcg::bayes {
namespace {

double log_sigmoid(double x) { return x < 0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x)); }

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double grid_prob_greater(const BetaPosterior& a, const BetaPosterior& b, int n) {
  // Midpoint grid over the unit square, restricted to the triangle x > y via
  // the running mass of b; diagonal cells count half.
  const double h = 1.0 / n;
  std::vector<double> wa(static_cast<std::size_t>(n)), wb(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * h;
    wa[static_cast<std::size_t>(i)] = std::exp(beta_log_density(a, x)) * h;
    wb[static_cast<std::size_t>(i)] = std::exp(beta_log_density(b, x)) * h;
  }
  const double za = std::accumulate(wa.begin(), wa.end(), 0.0);
  const double zb = std::accumulate(wb.begin(), wb.end(), 0.0);
  double below = 0.0;
  double p = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    p += wa[i] * (below + 0.5 * wb[i]);
    below += wb[i];
  }
  return p / (za * zb);
}

// Sampler coordinates: theta[0] = beta, theta[1] = c_1, theta[k] = log(c_k - c_{k-1}).
void unpack_cutpoints(std::span<const double> theta, std::vector<double>& c) {
  c.resize(theta.size() - 1);
  c[0] = theta[1];
  for (std::size_t k = 2; k < theta.size(); ++k) c[k - 1] = c[k - 2] + std::exp(theta[k]);
}

struct CountTable {
  int categories = 0;
  std::vector<double> counts[2];  // [group][category index]
};

double log_posterior_counts(std::span<const double> theta, const CountTable& table, double prior_scale,
                            std::vector<double>& cut) {
  for (double v : theta) {
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
  }
  unpack_cutpoints(theta, cut);
  for (std::size_t k = 1; k < cut.size(); ++k) {
    if (!(cut[k] > cut[k - 1])) return -std::numeric_limits<double>::infinity();
  }
  const double beta = theta[0];
  const double z = beta / prior_scale;
  double lp = -std::log1p(z * z);
  for (std::size_t k = 2; k < theta.size(); ++k) lp += theta[k];
  for (int g = 0; g < 2; ++g) {
    const double eta = g * beta;
    for (int k = 0; k < table.categories; ++k) {
      const double n = table.counts[g][static_cast<std::size_t>(k)];
      if (n > 0) lp += n * ordered_logistic_log_pmf(k + 1, eta, cut);
    }
  }
  return lp;
}

// Observed categories mapped onto 1..K, dropping empty ones.
CountTable tabulate(const RatingsDataset& data) {
  std::vector<int> seen(static_cast<std::size_t>(data.num_categories()), 0);
  for (int y : data.y) seen[static_cast<std::size_t>(y - data.min_category)] = 1;
  std::vector<int> rank(seen.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) rank[i] = next++;
  }
  CountTable table;
  table.categories = next;
  table.counts[0].assign(static_cast<std::size_t>(next), 0.0);
  table.counts[1].assign(static_cast<std::size_t>(next), 0.0);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    const int r = rank[static_cast<std::size_t>(data.y[i] - data.min_category)];
    table.counts[data.x[i]][static_cast<std::size_t>(r)] += 1.0;
  }
  return table;
}

std::vector<double> initial_theta(const CountTable& table) {
  std::vector<double> pooled(static_cast<std::size_t>(table.categories));
  double n = 0;
  for (int k = 0; k < table.categories; ++k) {
    pooled[static_cast<std::size_t>(k)] = table.counts[0][static_cast<std::size_t>(k)] + table.counts[1][static_cast<std::size_t>(k)];
    n += pooled[static_cast<std::size_t>(k)];
  }
  // Empirical logits of the pooled cumulative proportions.
  std::vector<double> cut;
  double cum = 0;
  for (int k = 0; k + 1 < table.categories; ++k) {
    cum += pooled[static_cast<std::size_t>(k)];
    const double q = std::clamp(cum / n, 1e-3, 1 - 1e-3);
    double c = std::log(q / (1 - q));
    if (!cut.empty()) c = std::max(c, cut.back() + 1e-2);
    cut.push_back(c);
  }
  std::vector<double> theta(static_cast<std::size_t>(table.categories), 0.0);
  theta[1] = cut[0];
  for (std::size_t k = 1; k < cut.size(); ++k) theta[k + 1] = std::log(cut[k] - cut[k - 1]);
  return theta;
}

// Lower-triangular Cholesky factor of a covariance matrix; falls back to the
// diagonal when the estimate is not positive definite.
std::vector<std::vector<double>> cholesky_or_diagonal(std::vector<std::vector<double>> cov) {
  const std::size_t d = cov.size();
  for (std::size_t i = 0; i < d; ++i) cov[i][i] += 1e-10;
  std::vector<std::vector<double>> l(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = cov[i][j];
      for (std::size_t k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
      if (i == j) {
        if (sum <= 0) {
          for (std::size_t r = 0; r < d; ++r) {
            std::fill(l[r].begin(), l[r].end(), 0.0);
            l[r][r] = std::sqrt(std::max(cov[r][r], 1e-8));
          }
          return l;
        }
        l[i][i] = std::sqrt(sum);
      } else {
        l[i][j] = sum / l[j][j];
      }
    }
  }
  return l;
}

struct ChainResult {
  std::vector<double> beta;
  std::vector<std::vector<double>> cutpoints;
  long long accepted = 0;
  long long proposals = 0;
};

ChainResult run_chain(const CountTable& table, const SamplerConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = static_cast<std::size_t>(table.categories);
  std::vector<double> cut;
  auto log_post = [&](std::span<const double> t) { return log_posterior_counts(t, table, config.prior_scale, cut); };

  std::vector<double> theta = initial_theta(table);
  for (double& v : theta) v += 0.1 * normal(rng.engine());
  double current = log_post(theta);
  if (!std::isfinite(current)) {
    theta = initial_theta(table);
    current = log_post(theta);
  }

  // Directions are columns of `basis`; identity until the covariance is known.
  std::vector<std::vector<double>> basis(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) basis[i][i] = 1.0;
  std::vector<double> scale(d, 0.5);
  std::vector<double> proposal(d);

  long long accepted = 0;
  long long proposals = 0;
  auto sweep = [&](bool adapt, int iteration) {
    for (std::size_t j = 0; j < d; ++j) {
      const double step = scale[j] * normal(rng.engine());
      for (std::size_t i = 0; i < d; ++i) proposal[i] = theta[i] + step * basis[i][j];
      const double candidate = log_post(proposal);
      const bool accept = std::log(rng.uniform01()) < candidate - current;
      if (accept) {
        theta = proposal;
        current = candidate;
      }
      if (adapt) {
        const double rate = 1.0 / std::sqrt(1.0 + iteration);
        scale[j] *= std::exp(rate * ((accept ? 1.0 : 0.0) - 0.44));
      } else {
        ++proposals;
        accepted += accept ? 1 : 0;
      }
    }
  };

  const int phase = std::max(1, config.burn_in / 2);
  std::vector<std::vector<double>> warm;
  for (int it = 0; it < phase; ++it) {
    sweep(true, it);
    if (it >= phase / 2) warm.push_back(theta);
  }
  if (warm.size() > d + 1) {
    std::vector<double> mean(d, 0.0);
    for (const auto& t : warm) {
      for (std::size_t i = 0; i < d; ++i) mean[i] += t[i] / static_cast<double>(warm.size());
    }
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& t : warm) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
          cov[i][k] += (t[i] - mean[i]) * (t[k] - mean[k]) / static_cast<double>(warm.size() - 1);
        }
      }
    }
    basis = cholesky_or_diagonal(std::move(cov));
    std::fill(scale.begin(), scale.end(), 2.4);
  }
  for (int it = 0; it < config.burn_in - phase; ++it) sweep(true, it);

  ChainResult out;
  out.beta.reserve(static_cast<std::size_t>(config.draws));
  out.cutpoints.reserve(static_cast<std::size_t>(config.draws));
  for (int it = 0; it < config.draws; ++it) {
    sweep(false, it);
    unpack_cutpoints(theta, cut);
    out.beta.push_back(theta[0]);
    out.cutpoints.push_back(cut);
  }
  out.accepted = accepted;
  out.proposals = proposals;
  return out;
}

}  // namespace

BetaPosterior bernoulli_posterior(long long successes, long long trials) {
  if (successes < 0 || trials < 0 || successes > trials) {
    throw std::invalid_argument("need 0 <= successes <= trials");
  }
  return {1.0 + static_cast<double>(successes), 1.0 + static_cast<double>(trials - successes)};
}

double beta_log_density(const BetaPosterior& p, double x) {
  if (x <= 0.0 || x >= 1.0) return -std::numeric_limits<double>::infinity();
  return (p.alpha - 1) * std::log(x) + (p.beta - 1) * std::log1p(-x) - log_beta_fn(p.alpha, p.beta);
}

ProbabilityEstimate prob_greater(const BetaPosterior& a, const BetaPosterior& b, const ComparisonMethod& method) {
  if (a.alpha <= 0 || a.beta <= 0 || b.alpha <= 0 || b.beta <= 0) {
    throw std::invalid_argument("beta parameters must be positive");
  }
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    if (mc->draws < kMinMonteCarloDraws) throw std::invalid_argument("too few Monte Carlo draws");
    Rng rng(mc->seed);
    std::gamma_distribution<double> ga_a(a.alpha), gb_a(a.beta), ga_b(b.alpha), gb_b(b.beta);
    long long wins = 0;
    for (long long i = 0; i < mc->draws; ++i) {
      const double xa = ga_a(rng.engine());
      const double ya = gb_a(rng.engine());
      const double xb = ga_b(rng.engine());
      const double yb = gb_b(rng.engine());
      if (xa / (xa + ya) > xb / (xb + yb)) ++wins;
    }
    const double p = static_cast<double>(wins) / static_cast<double>(mc->draws);
    return {p, mcse(p, mc->draws)};
  }
  const int grid = std::get<NumericIntegration>(method).grid;
  if (grid < kMinGrid) throw std::invalid_argument("integration grid too coarse");
  const double fine = grid_prob_greater(a, b, grid);
  const double coarse = grid_prob_greater(a, b, grid / 2);
  return {fine, std::abs(fine - coarse)};
}

double ordered_logistic_log_pmf(int k, double eta, std::span<const double> c) {
  const int categories = static_cast<int>(c.size()) + 1;
  if (k < 1 || k > categories) throw std::invalid_argument("category out of range");
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (!(c[i] > c[i - 1])) throw std::invalid_argument("cutpoints must be strictly increasing");
  }
  if (categories == 1) return 0.0;
  if (k == 1) return log_sigmoid(c[0] - eta);
  if (k == categories) return log_sigmoid(eta - c[static_cast<std::size_t>(k - 2)]);
  const double upper = eta - c[static_cast<std::size_t>(k - 2)];
  const double lower = eta - c[static_cast<std::size_t>(k - 1)];
  // sigma(u) - sigma(l) = sigma(u) * sigma(-l) * (1 - exp(l - u))
  return log_sigmoid(upper) + log_sigmoid(-lower) + std::log(-std::expm1(lower - upper));
}

double mcse(double p, long long n_draws) {
  if (n_draws < 1) throw std::invalid_argument("need at least one draw");
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return std::sqrt(p * (1 - p) / static_cast<double>(n_draws));
}

double mcse_batch_means(const std::vector<std::vector<double>>& chains) {
  std::vector<double> batch_means;
  for (const auto& chain : chains) {
    const std::size_t n = chain.size();
    if (n == 0) continue;
    const std::size_t b = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n))));
    const std::size_t batches = n / b;
    const std::size_t skip = n - batches * b;
    for (std::size_t i = 0; i < batches; ++i) {
      const auto first = chain.begin() + static_cast<std::ptrdiff_t>(skip + i * b);
      batch_means.push_back(std::accumulate(first, first + static_cast<std::ptrdiff_t>(b), 0.0) / static_cast<double>(b));
    }
  }
  const std::size_t m = batch_means.size();
  if (m < 2) return 0.0;
  const double mean = std::accumulate(batch_means.begin(), batch_means.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double v : batch_means) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
}

double mcse_batch_means(std::span<const double> series) {
  return mcse_batch_means(std::vector<std::vector<double>>{std::vector<double>(series.begin(), series.end())});
}

void RatingsDataset::check() const {
  if (y.size() != x.size()) throw std::invalid_argument("ratings and group indicators differ in length");
  if (min_category >= max_category) throw std::invalid_argument("need at least two declared categories");
  bool groups[2] = {false, false};
  std::vector<int> seen;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < min_category || y[i] > max_category) {
      throw std::invalid_argument("rating " + std::to_string(y[i]) + " outside the declared categories");
    }
    if (x[i] != 0 && x[i] != 1) throw std::invalid_argument("group indicator must be 0 or 1");
    groups[x[i]] = true;
    if (std::find(seen.begin(), seen.end(), y[i]) == seen.end()) seen.push_back(y[i]);
  }
  if (seen.size() < 2) throw std::invalid_argument("need at least two distinct rating categories");
  if (!groups[0] || !groups[1]) throw std::invalid_argument("both groups must be present");
}

double ordered_logistic_log_posterior(std::span<const double> theta, const RatingsDataset& data, double prior_scale) {
  CountTable table;
  table.categories = data.num_categories();
  table.counts[0].assign(static_cast<std::size_t>(table.categories), 0.0);
  table.counts[1].assign(static_cast<std::size_t>(table.categories), 0.0);
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    table.counts[data.x[i]][static_cast<std::size_t>(data.y[i] - data.min_category)] += 1.0;
  }
  if (theta.size() != static_cast<std::size_t>(table.categories)) {
    throw std::invalid_argument("theta must hold beta plus one coordinate per cutpoint");
  }
  std::vector<double> cut;
  return log_posterior_counts(theta, table, prior_scale, cut);
}

OrderedLogisticPosterior fit_ordered_logistic(const RatingsDataset& data, const SamplerConfig& config) {
  data.check();
  if (config.chains < 1 || config.draws < 1 || config.burn_in < 2) throw std::invalid_argument("bad sampler budget");
  if (static_cast<long long>(config.chains) * config.draws < config.min_total_draws) {
    throw std::invalid_argument("sampler budget below the configured minimum draw count");
  }
  if (!(config.prior_scale > 0)) throw std::invalid_argument("prior scale must be positive");

  const CountTable table = tabulate(data);
  std::vector<std::future<ChainResult>> futures;
  for (int c = 0; c < config.chains; ++c) {
    futures.push_back(std::async(std::launch::async, run_chain, std::cref(table), std::cref(config),
                                 mix_seed(config.seed, static_cast<std::uint64_t>(c))));
  }

  OrderedLogisticPosterior post;
  post.chains = config.chains;
  std::vector<std::vector<double>> positive, negative;
  long long accepted = 0, proposals = 0;
  for (auto& f : futures) {
    ChainResult chain = f.get();
    accepted += chain.accepted;
    proposals += chain.proposals;
    std::vector<double> pos, neg;
    for (double b : chain.beta) {
      pos.push_back(b > 0 ? 1.0 : 0.0);
      neg.push_back(b < 0 ? 1.0 : 0.0);
    }
    positive.push_back(std::move(pos));
    negative.push_back(std::move(neg));
    post.beta_samples.insert(post.beta_samples.end(), chain.beta.begin(), chain.beta.end());
    for (auto& c : chain.cutpoints) post.cutpoint_samples.push_back(std::move(c));
  }
  post.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposals);
  if (post.acceptance_rate < 0.05 || post.acceptance_rate > 0.95) {
    throw ConvergenceError("sampler acceptance rate " + std::to_string(post.acceptance_rate) +
                           " outside [0.05, 0.95]");
  }

  const double n = static_cast<double>(post.beta_samples.size());
  post.beta_mean = std::accumulate(post.beta_samples.begin(), post.beta_samples.end(), 0.0) / n;
  double ss = 0;
  for (double b : post.beta_samples) ss += (b - post.beta_mean) * (b - post.beta_mean);
  post.beta_sd = std::sqrt(ss / std::max(1.0, n - 1));

  auto statement = [](std::string claim, const std::vector<std::vector<double>>& chains) {
    double sum = 0, count = 0;
    for (const auto& ch : chains) {
      sum += std::accumulate(ch.begin(), ch.end(), 0.0);
      count += static_cast<double>(ch.size());
    }
    return ProbStatement{std::move(claim), sum / count, mcse_batch_means(chains)};
  };
  post.beta_positive = statement("beta > 0", positive);
  post.beta_negative = statement("beta < 0", negative);
  return post;
}

}  // namespace m3pcg::bayes
