#include "filtra/chain.hpp"

#include <cmath>

namespace filtra {

namespace {

std::vector<double> log_factorials(int n) {
  std::vector<double> lf(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) lf[static_cast<std::size_t>(j)] = std::lgamma(j + 1.0);
  return lf;
}

void normalize(std::vector<double>& w) {
  double s = 0.0;
  for (double x : w) s += x;
  for (double& x : w) x /= s;
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc / 2;
}

}  // namespace

std::pair<int, double> poisson_truncation(double lambda, double tail) {
  if (!(lambda > 0)) throw Error("Poisson mean must be positive");
  if (!(tail > 0)) throw Error("truncation tail bound must be positive");
  const int J = static_cast<int>(std::ceil(lambda + 40.0 * std::sqrt(lambda) + 60.0));
  std::vector<double> pmf(static_cast<std::size_t>(J) + 1);
  const double ll = std::log(lambda);
  for (int j = 0; j <= J; ++j) pmf[static_cast<std::size_t>(j)] = std::exp(-lambda + j * ll - std::lgamma(j + 1.0));
  // suffix sums from the far end keep small tails accurate
  double above = 0.0;
  int K = J;
  for (int j = J; j >= 0; --j) {
    if (above + pmf[static_cast<std::size_t>(j)] >= tail) {
      K = j;
      break;
    }
    above += pmf[static_cast<std::size_t>(j)];
    K = j - 1;
  }
  if (K < 0) K = 0;
  return {K, above};
}

std::vector<double> poisson_pmf(double lambda, int K) {
  if (!(lambda > 0)) throw Error("Poisson mean must be positive");
  std::vector<double> w(static_cast<std::size_t>(K) + 1);
  const double ll = std::log(lambda);
  for (int j = 0; j <= K; ++j) w[static_cast<std::size_t>(j)] = std::exp(-lambda + j * ll - std::lgamma(j + 1.0));
  normalize(w);
  return w;
}

std::vector<double> binomial_pmf(int k, double theta, int K) {
  if (k < 0 || K < k) throw Error("binomial_pmf: need 0 <= k <= K");
  if (!(theta >= 0 && theta <= 1)) throw Error("binomial_pmf: theta outside [0, 1]");
  std::vector<double> w(static_cast<std::size_t>(K) + 1, 0.0);
  if (theta == 1.0) {
    w[static_cast<std::size_t>(k)] = 1.0;
    return w;
  }
  if (theta == 0.0) {
    w[0] = 1.0;
    return w;
  }
  const double lt = std::log(theta), l1t = std::log1p(-theta);
  const double lk = std::lgamma(k + 1.0);
  for (int j = 0; j <= k; ++j)
    w[static_cast<std::size_t>(j)] = std::exp(lk - std::lgamma(j + 1.0) - std::lgamma(k - j + 1.0) + j * lt + (k - j) * l1t);
  normalize(w);
  return w;
}

ChainRule<double> poisson_rule(LambdaRule lambda, int depth, PoissonOptions opt, PoissonChainInfo* info) {
  if (depth > 0) throw Error("chain depth must be <= 0");
  for (int n = depth; n <= 0; ++n) {
    double l = lambda(n);
    if (!(l > 0) || !std::isfinite(l)) throw Error("lambda must be positive at level " + std::to_string(n));
    if (n > depth && l > lambda(n - 1) * (1 + 1e-15))
      throw Error("lambda must be nonincreasing toward level 0 (level " + std::to_string(n) + ")");
  }
  auto [K, tail] = poisson_truncation(lambda(depth), opt.tail_bound);
  if (tail > opt.tail_bound) throw Error("Poisson truncation tail above bound");
  if (info) *info = {K, tail};

  ChainRule<double> r;
  r.name = "poisson";
  r.cache_kernels = false;
  r.space = [K](int level) { return OrderedStateSpace::range(level, 0, K); };
  auto lf = std::make_shared<std::vector<double>>(log_factorials(K));
  auto thinning = [K, lf, space = r.space](int from, int to, double theta) {
    auto src = space(from);
    auto dst = space(to);
    std::vector<SparseRow<double>> rows(static_cast<std::size_t>(K) + 1);
    const double lt = std::log(theta), l1t = theta < 1 ? std::log1p(-theta) : 0.0;
    for (int k = 0; k <= K; ++k) {
      auto& row = rows[static_cast<std::size_t>(k)];
      if (theta >= 1.0) {
        row.push_back({static_cast<std::size_t>(k), 1.0});
        continue;
      }
      double s = 0.0;
      const auto& f = *lf;
      for (int j = 0; j <= k; ++j) {
        double w = std::exp(f[static_cast<std::size_t>(k)] - f[static_cast<std::size_t>(j)] -
                            f[static_cast<std::size_t>(k - j)] + j * lt + (k - j) * l1t);
        if (w > 0) {
          row.push_back({static_cast<std::size_t>(j), w});
          s += w;
        }
      }
      for (auto& e : row) e.weight /= s;
    }
    return LevelKernel<double>(src, dst, std::move(rows));
  };
  r.kernel_into = [lambda, thinning](int level) {
    return thinning(level - 1, level, std::min(1.0, lambda(level) / lambda(level - 1)));
  };
  r.composer = [lambda, thinning](int from, int to) {
    return thinning(from, to, std::min(1.0, lambda(to) / lambda(from)));
  };
  r.seed = [lambda, K, space = r.space](int level) {
    return Dist<double>(space(level), poisson_pmf(lambda(level), K));
  };
  r.coupler = quantile_coupler<double>(r.kernel_into);
  return r;
}

LeveledChain<double> poisson_chain(LambdaRule lambda, int depth, PoissonOptions opt, PoissonChainInfo* info) {
  return LeveledChain<double>(poisson_rule(std::move(lambda), depth, opt, info), depth);
}

BoundCheck poisson_distance_bound(double lambda, double lambda_prime, double tail) {
  if (lambda < lambda_prime) throw Error("poisson_distance_bound needs lambda >= lambda'");
  if (!(lambda_prime > 0)) throw Error("Poisson means must be positive");
  // each law gets half the allowance so the total slack stays within `tail`
  auto [K, t1] = poisson_truncation(lambda, tail / 2);
  auto t2 = 0.0;
  {
    // mass of Poisson(lambda') above the common K (smaller mean, smaller tail)
    auto full = poisson_truncation(lambda_prime, tail / 2);
    if (full.first > K) K = full.first;
    const double ll = std::log(lambda_prime);
    double below = 0.0;
    for (int j = 0; j <= K; ++j) below += std::exp(-lambda_prime + j * ll - std::lgamma(j + 1.0));
    t2 = std::max(0.0, std::min(full.second, 1.0 - below));
  }
  BoundCheck c;
  c.value = tv(poisson_pmf(lambda, K), poisson_pmf(lambda_prime, K));
  c.bound = 1.0 - std::exp(lambda_prime - lambda);
  c.slack = t1 + t2;
  c.holds = c.value <= c.bound + c.slack + 1e-15;
  return c;
}

BoundCheck binomial_poisson_bound(int k, double theta, double tail) {
  if (k < 1) throw Error("binomial_poisson_bound needs k >= 1");
  if (!(theta > 0 && theta <= 1)) throw Error("binomial_poisson_bound needs theta in (0, 1]");
  auto [K, t] = poisson_truncation(k * theta, tail);
  K = std::max(K, k);
  const double ll = std::log(k * theta);
  double above = 1.0;
  for (int j = 0; j <= K; ++j) above -= std::exp(-k * theta + j * ll - std::lgamma(j + 1.0));
  BoundCheck c;
  c.value = tv(binomial_pmf(k, theta, K), poisson_pmf(k * theta, K));
  c.bound = k * theta * theta;
  c.slack = std::max(0.0, std::min(t, above));
  c.holds = c.value <= c.bound + c.slack + 1e-15;
  return c;
}

}  // namespace filtra
