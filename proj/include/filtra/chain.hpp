#ifndef FILTRA_CHAIN_HPP
#define FILTRA_CHAIN_HPP

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "filtra/kernel.hpp"
#include "filtra/parallel.hpp"
#include "filtra/probcore.hpp"
#include "filtra/rng.hpp"
#include "filtra/transport.hpp"

namespace filtra {

template <Numeric T>
struct PairMass {
  std::size_t a;
  std::size_t b;
  T weight;
};

/// Joint law of one step of two copies started at x and y. `level` is the source level.
template <Numeric T>
using Coupler = std::function<std::vector<PairMass<T>>(int level, std::size_t x, std::size_t y)>;

// Level-indexed generator rules. Kernels are indexed by their target level:
// kernel_into(n) maps level n-1 to level n.
template <Numeric T>
struct ChainRule {
  std::string name;
  std::function<SpacePtr(int level)> space;
  std::function<LevelKernel<T>(int level)> kernel_into;
  std::function<Dist<T>(int level)> seed;  // law at the deepest level of a window
  std::function<LevelKernel<T>(int from, int to)> composer;  // optional closed form for multi-step kernels
  Coupler<T> coupler;                                        // optional well-ordered one-step coupler
  bool cache_kernels = true;
};

// A finite window [m, 0] of a leveled Markov chain, with marginals pushed
// forward from the seed law at level m.
template <Numeric T>
class LeveledChain {
 public:
  LeveledChain(ChainRule<T> rule, int depth) : rule_(std::move(rule)), depth_(depth) {
    if (depth_ > 0) throw Error("chain depth must be <= 0");
    if (!rule_.space || !rule_.kernel_into || !rule_.seed) throw Error("chain rule is incomplete");
    const std::size_t levels = static_cast<std::size_t>(-depth_) + 1;
    spaces_.reserve(levels);
    for (int n = depth_; n <= 0; ++n) {
      auto s = rule_.space(n);
      if (s->level() != n) throw Error("chain rule produced a space for the wrong level");
      spaces_.push_back(std::move(s));
    }
    kernels_.resize(levels);
    marginals_.reserve(levels);
    auto seed = rule_.seed(depth_);
    require_same_space(seed.space(), spaces_[0], "chain seed");
    marginals_.push_back(std::move(seed));
    for (int n = depth_ + 1; n <= 0; ++n) {
      auto k = kernel_into(n);
      marginals_.push_back(push_forward(marginals_.back(), *k));
    }
  }

  const std::string& name() const { return rule_.name; }
  int depth() const { return depth_; }
  const ChainRule<T>& rule() const { return rule_; }
  bool contains(int n) const { return n >= depth_ && n <= 0; }

  const SpacePtr& space(int n) const {
    check_level(n);
    return spaces_[index(n)];
  }

  const Dist<T>& marginal(int n) const {
    check_level(n);
    return marginals_[index(n)];
  }

  /// Kernel from level n-1 to level n.
  std::shared_ptr<const LevelKernel<T>> kernel_into(int n) const {
    if (n <= depth_ || n > 0) throw Error("no kernel into level " + std::to_string(n) + " in this window");
    {
      std::lock_guard lock(mu_);
      if (kernels_[index(n)]) return kernels_[index(n)];
    }
    auto k = std::make_shared<const LevelKernel<T>>(rule_.kernel_into(n));
    require_same_space(k->source(), spaces_[index(n - 1)], "chain kernel source");
    require_same_space(k->target(), spaces_[index(n)], "chain kernel target");
    if (rule_.cache_kernels) {
      std::lock_guard lock(mu_);
      kernels_[index(n)] = k;
    }
    return k;
  }

  /// Kernel from level n to level n+1.
  std::shared_ptr<const LevelKernel<T>> kernel_from(int n) const { return kernel_into(n + 1); }

  bool has_coupler() const { return static_cast<bool>(rule_.coupler); }

  std::vector<PairMass<T>> couple(int level, std::size_t x, std::size_t y) const {
    if (!rule_.coupler) throw Error("chain '" + name() + "' has no coupling constructor");
    return rule_.coupler(level, x, y);
  }

  /// The same rule over another window.
  LeveledChain with_depth(int depth) const { return LeveledChain(rule_, depth); }

 private:
  void check_level(int n) const {
    if (!contains(n)) throw Error("level " + std::to_string(n) + " outside the chain window");
  }
  std::size_t index(int n) const { return static_cast<std::size_t>(n - depth_); }

  ChainRule<T> rule_;
  int depth_;
  std::vector<SpacePtr> spaces_;
  std::vector<Dist<T>> marginals_;
  mutable std::mutex mu_;
  mutable std::vector<std::shared_ptr<const LevelKernel<T>>> kernels_;
};

/// Rows L(X_to | X_from = x), multiplied right to left.
template <Numeric T>
LevelKernel<T> compose_kernels(const LeveledChain<T>& chain, int from, int to) {
  if (from >= to) throw Error("compose_kernels needs from < to");
  if (!chain.contains(from) || !chain.contains(to)) throw Error("compose_kernels: level outside window");
  if (chain.rule().composer) {
    auto k = chain.rule().composer(from, to);
    require_same_space(k.source(), chain.space(from), "composer source");
    require_same_space(k.target(), chain.space(to), "composer target");
    return k;
  }
  LevelKernel<T> acc = *chain.kernel_into(to);
  for (int n = to - 1; n > from; --n) acc = compose(*chain.kernel_into(n), acc);
  return acc;
}

template <Numeric T>
const Dist<T>& marginal_at(const LeveledChain<T>& chain, int n) {
  return chain.marginal(n);
}

// Each source state's row laid out on [0, 1) as consecutive intervals in
// target order; f(x, u) is the label of the interval containing u. With a
// totally ordered target this is the quantile updating function.
template <Numeric T>
class UpdatingFunction {
 public:
  struct Interval {
    T lo;
    T hi;
    std::size_t target;
  };

  explicit UpdatingFunction(std::shared_ptr<const LevelKernel<T>> k) : k_(std::move(k)) {
    const std::size_t n = k_->sources();
    cuts_.resize(n);
    cuts_d_.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      T acc = Num<T>::zero();
      for (const auto& e : k_->row_entries(x)) {
        acc += e.weight;
        cuts_[x].push_back(acc);
        cuts_d_[x].push_back(Num<T>::to_double(acc));
      }
      if constexpr (!Num<T>::exact) {
        cuts_[x].back() = 1.0;
      }
      cuts_d_[x].back() = 1.0;
    }
    increasing_ = k_->source()->totally_ordered() && k_->target()->totally_ordered();
    for (std::size_t x = 0; x + 1 < n && increasing_; ++x)
      for (const auto& p : common_step(x, x + 1))
        if (p.a > p.b && Num<T>::positive(p.weight, 1e-12)) {
          increasing_ = false;
          break;
        }
  }

  const LevelKernel<T>& kernel() const { return *k_; }
  bool increasing() const { return increasing_; }

  std::size_t operator()(std::size_t x, double u) const {
    const auto& c = cuts_d_[x];
    auto it = std::upper_bound(c.begin(), c.end(), u);
    if (it == c.end()) --it;
    return k_->row_entries(x)[static_cast<std::size_t>(it - c.begin())].index;
  }

  std::vector<Interval> partition(std::size_t x) const {
    std::vector<Interval> out;
    T lo = Num<T>::zero();
    auto row = k_->row_entries(x);
    for (std::size_t i = 0; i < row.size(); ++i) {
      out.push_back({lo, cuts_[x][i], row[i].index});
      lo = cuts_[x][i];
    }
    return out;
  }

  /// Law of (f(x, U), f(y, U)) for one shared uniform U.
  std::vector<PairMass<T>> common_step(std::size_t x, std::size_t y) const {
    std::vector<PairMass<T>> out;
    auto rx = k_->row_entries(x);
    auto ry = k_->row_entries(y);
    const auto& cx = cuts_[x];
    const auto& cy = cuts_[y];
    std::size_t i = 0, j = 0;
    T prev = Num<T>::zero();
    while (i < cx.size() && j < cy.size()) {
      const T& hi = cx[i] < cy[j] ? cx[i] : cy[j];
      T len = hi - prev;
      if (Num<T>::positive(len, 0.0)) out.push_back({rx[i].index, ry[j].index, len});
      prev = hi;
      const bool adv_i = cx[i] == hi;
      const bool adv_j = cy[j] == hi;
      if (adv_i) ++i;
      if (adv_j) ++j;
    }
    return out;
  }

 private:
  std::shared_ptr<const LevelKernel<T>> k_;
  std::vector<std::vector<T>> cuts_;
  std::vector<std::vector<double>> cuts_d_;
  bool increasing_ = false;
};

/// Quantile updating function of a kernel with a totally ordered target.
template <Numeric T>
UpdatingFunction<T> quantile_updating(std::shared_ptr<const LevelKernel<T>> k) {
  if (!k->target()->totally_ordered()) throw Error("quantile updating needs a totally ordered target");
  return UpdatingFunction<T>(std::move(k));
}

template <Numeric T>
bool monotonicity_check(const LevelKernel<T>& k) {
  if (!k.source()->totally_ordered() || !k.target()->totally_ordered())
    throw Error("monotonicity_check: partially ordered spaces are handled by the well-ordered checks");
  return kernel_monotone(k);
}

template <Numeric T>
bool identifiability_check(const LevelKernel<T>& k) {
  return rows_distinct(k, Num<T>::exact ? 0.0 : kFloatTol);
}

/// Sparse joint law on the product of one level's space with itself.
template <Numeric T>
using JointLaw = std::vector<PairMass<T>>;

/// Pushes a joint law from level `from` to level `to` with one shared innovation per level.
/// Throws when a level's product space exceeds `cap` pairs.
template <Numeric T>
JointLaw<T> joint_evolve(const LeveledChain<T>& chain, int from, JointLaw<T> joint, int to,
                         std::size_t cap = 4'000'000) {
  if (from > to) throw Error("joint_evolve: from > to");
  for (int n = from + 1; n <= to; ++n) {
    UpdatingFunction<T> f(chain.kernel_into(n));
    const std::size_t size = chain.space(n)->size();
    if (size * size > cap) throw Error("product-space cap exceeded at level " + std::to_string(n));
    std::vector<T> acc(size * size, Num<T>::zero());
    std::vector<char> touched(size * size, 0);
    std::vector<std::size_t> used;
    for (const auto& p : joint)
      for (const auto& q : f.common_step(p.a, p.b)) {
        std::size_t key = q.a * size + q.b;
        if (!touched[key]) {
          touched[key] = 1;
          used.push_back(key);
        }
        acc[key] += p.weight * q.weight;
      }
    std::sort(used.begin(), used.end());
    joint.clear();
    for (auto key : used) joint.push_back({key / size, key % size, std::move(acc[key])});
  }
  return joint;
}

template <Numeric T>
T joint_expectation(const JointLaw<T>& joint, const LevelMetric<T>& rho) {
  T acc = Num<T>::zero();
  for (const auto& p : joint) acc += p.weight * rho(p.a, p.b);
  return acc;
}

/// E[rho(X_n, Y_n(m, x_m))] with X_m ~ mu_m, Y_m = x_m, under common innovations.
template <Numeric T>
T exact_pw_expectation(const LeveledChain<T>& chain, int m, std::size_t x_m, int n, const LevelMetric<T>& rho,
                       std::size_t cap = 4'000'000) {
  if (m >= n) throw Error("exact_pw_expectation needs m < n");
  require_same_space(rho.space(), chain.space(n), "exact_pw_expectation");
  if (x_m >= chain.space(m)->size()) throw Error("start state not in the level space");
  JointLaw<T> joint;
  const auto& mu = chain.marginal(m);
  for (std::size_t x = 0; x < mu.size(); ++x)
    if (Num<T>::positive(mu[x], 0.0)) joint.push_back({x, x_m, mu[x]});
  return joint_expectation(joint_evolve(chain, m, std::move(joint), n, cap), rho);
}

/// E[rho(Y_to(from, y), Y_to(from, z))] under common innovations.
template <Numeric T>
T exact_pair_expectation(const LeveledChain<T>& chain, int from, std::size_t y, std::size_t z, int to,
                         const LevelMetric<T>& rho, std::size_t cap = 4'000'000) {
  JointLaw<T> joint{{y, z, Num<T>::one()}};
  return joint_expectation(joint_evolve(chain, from, std::move(joint), to, cap), rho);
}

/// Inverse-CDF draw in state index order.
template <Numeric T>
std::size_t sample_index(const std::vector<double>& cuts, double u) {
  auto it = std::upper_bound(cuts.begin(), cuts.end(), u);
  if (it == cuts.end()) --it;
  return static_cast<std::size_t>(it - cuts.begin());
}

template <Numeric T>
std::vector<double> cumulative(const Dist<T>& d) {
  std::vector<double> c;
  double acc = 0.0;
  for (const auto& w : d.weights()) {
    acc += Num<T>::to_double(w);
    c.push_back(acc);
  }
  if (!c.empty()) c.back() = 1.0;
  return c;
}

struct PathSample {
  int from = 0;
  int to = 0;
  std::vector<std::size_t> states;   // X_from .. X_to
  std::vector<std::size_t> coupled;  // Y_from .. Y_to started at the fixed state
  std::vector<double> innovations;   // U_from (draw of X_from), U_{from+1} .. U_to
};

struct PWOutcome {
  std::size_t x;
  std::size_t y;
};

// Propp-Wilson pairs (X_n, Y_n(m, x_m)) driven by shared uniforms. Trial t uses
// the counter-based stream (seed, t, level), so trials replay identically.
template <Numeric T>
class PWSampler {
 public:
  PWSampler(const LeveledChain<T>& chain, int m, std::size_t x_m, int n) : m_(m), n_(n), x_m_(x_m) {
    if (m >= n) throw Error("propp_wilson_run needs m < n");
    if (!chain.contains(m) || !chain.contains(n)) throw Error("propp_wilson_run: level outside window");
    if (x_m >= chain.space(m)->size()) throw Error("start state not in the level space");
    seed_cuts_ = cumulative(chain.marginal(m));
    for (int l = m + 1; l <= n; ++l) {
      steps_.emplace_back(chain.kernel_into(l));
      if (!steps_.back().increasing()) increasing_ = false;
    }
  }

  bool increasing() const { return increasing_; }

  PWOutcome run(const CounterRng& rng, std::uint64_t trial, PathSample* path = nullptr) const {
    double u0 = rng.uniform(0, trial, m_);
    std::size_t x = sample_index<T>(seed_cuts_, u0);
    std::size_t y = x_m_;
    if (path) {
      *path = PathSample{m_, n_, {x}, {y}, {u0}};
    }
    for (int l = m_ + 1; l <= n_; ++l) {
      double u = rng.uniform(1, trial, l);
      const auto& f = steps_[static_cast<std::size_t>(l - m_ - 1)];
      x = f(x, u);
      y = f(y, u);
      if (path) {
        path->states.push_back(x);
        path->coupled.push_back(y);
        path->innovations.push_back(u);
      }
    }
    return {x, y};
  }

 private:
  int m_;
  int n_;
  std::size_t x_m_;
  std::vector<double> seed_cuts_;
  std::vector<UpdatingFunction<T>> steps_;
  bool increasing_ = true;
};

template <Numeric T>
PWOutcome propp_wilson_run(const LeveledChain<T>& chain, int m, std::size_t x_m, int n, std::uint64_t seed,
                           std::uint64_t trial = 0, PathSample* path = nullptr) {
  PWSampler<T> s(chain, m, x_m, n);
  return s.run(CounterRng(seed), trial, path);
}

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
};

/// Mean and standard error of per-trial values; the sum runs in trial order so
/// the result does not depend on the thread count.
inline MCEstimate summarize(const std::vector<double>& values) {
  MCEstimate e;
  e.trials = values.size();
  if (values.empty()) return e;
  double s = 0.0;
  for (double v : values) s += v;
  e.mean = s / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  if (values.size() > 1) e.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  return e;
}

/// Monte Carlo estimate of E[rho(X_n, Y_n(m, x_m))].
template <Numeric T>
MCEstimate pw_monte_carlo(const PWSampler<T>& sampler, const LevelMetric<T>& rho, std::size_t trials,
                          std::uint64_t seed, bool parallel = true) {
  CounterRng rng(seed);
  std::vector<double> values(trials, 0.0);
  auto one = [&](std::size_t t) {
    auto o = sampler.run(rng, t);
    values[t] = Num<T>::to_double(rho(o.x, o.y));
  };
  if (parallel) {
    FirstError err;
#pragma omp parallel for schedule(static) num_threads(thread_budget())
    for (long t = 0; t < static_cast<long>(trials); ++t) err.run([&] { one(static_cast<std::size_t>(t)); });
    err.rethrow();
  } else {
    for (std::size_t t = 0; t < trials; ++t) one(t);
  }
  return summarize(values);
}

enum class StartPolicy {
  minimizing,  // argmin_x W1(L(X_n | X_m = x), mu_n)
  median,      // first state where the cdf of mu_m reaches 1/2
};

inline const char* to_string(StartPolicy p) { return p == StartPolicy::minimizing ? "minimizing" : "median"; }

template <Numeric T>
std::size_t choose_start(const LeveledChain<T>& chain, int m, int n, const LevelMetric<T>& rho,
                         StartPolicy policy = StartPolicy::minimizing) {
  const auto& mu_m = chain.marginal(m);
  if (policy == StartPolicy::median) {
    T acc = Num<T>::zero();
    T half = Num<T>::ratio(1, 2);
    for (std::size_t x = 0; x < mu_m.size(); ++x) {
      acc += mu_m[x];
      if (Num<T>::le(half, acc, 0.0)) return x;
    }
    return mu_m.size() - 1;
  }
  auto k = compose_kernels(chain, m, n);
  auto target = sparse_of(chain.marginal(n));
  std::optional<std::size_t> best;
  T best_value = Num<T>::zero();
  for (std::size_t x = 0; x < mu_m.size(); ++x) {
    T d = kantorovich_rows<T>(k.row_entries(x), target, rho);
    if (!best || Num<T>::lt(d, best_value, 0.0)) {
      best = x;
      best_value = d;
    }
  }
  return *best;
}

/// Four states {-1,1}^2 under the coordinate order; each step flips one coordinate chosen uniformly.
template <Numeric T>
ChainRule<T> square_walk_rule() {
  ChainRule<T> r;
  r.name = "square-walk";
  r.space = [](int level) {
    return OrderedStateSpace::coordinates(level, {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}});
  };
  r.kernel_into = [space = r.space](int level) {
    auto src = space(level - 1);
    auto dst = space(level);
    std::vector<SparseRow<T>> rows;
    for (std::size_t x = 0; x < src->size(); ++x) {
      const auto& s = src->state(x);
      rows.push_back({{*dst->index_of({-s[0], s[1]}), Num<T>::ratio(1, 2)},
                      {*dst->index_of({s[0], -s[1]}), Num<T>::ratio(1, 2)}});
    }
    return LevelKernel<T>(src, dst, std::move(rows));
  };
  r.seed = [space = r.space](int level) { return Dist<T>::uniform(space(level)); };
  // both copies flip the same coordinate
  r.coupler = [space = r.space](int level, std::size_t x, std::size_t y) {
    auto src = space(level);
    auto dst = space(level + 1);
    const auto& a = src->state(x);
    const auto& b = src->state(y);
    return std::vector<PairMass<T>>{
        {*dst->index_of({-a[0], a[1]}), *dst->index_of({-b[0], b[1]}), Num<T>::ratio(1, 2)},
        {*dst->index_of({a[0], -a[1]}), *dst->index_of({b[0], -b[1]}), Num<T>::ratio(1, 2)}};
  };
  return r;
}

template <Numeric T>
LeveledChain<T> square_walk_chain(int depth) {
  return LeveledChain<T>(square_walk_rule<T>(), depth);
}

/// Quantile coupler for chains with totally ordered levels: joint law of two rows under one shared uniform.
template <Numeric T>
Coupler<T> quantile_coupler(std::function<LevelKernel<T>(int)> kernel_into) {
  return [kernel_into = std::move(kernel_into)](int level, std::size_t x, std::size_t y) {
    UpdatingFunction<T> f(std::make_shared<const LevelKernel<T>>(kernel_into(level + 1)));
    return f.common_step(x, y);
  };
}

// Poisson chain (floating point only: the Poisson weights are transcendental).
struct PoissonOptions {
  double tail_bound = 1e-9;
};

/// Level-indexed mean rule; must be positive and nonincreasing toward level 0.
using LambdaRule = std::function<double(int level)>;

/// Smallest K with P(Poisson(lambda) > K) below `tail`; also returns that tail mass.
std::pair<int, double> poisson_truncation(double lambda, double tail);
/// Poisson(lambda) on {0..K}, renormalized.
std::vector<double> poisson_pmf(double lambda, int K);
/// Binomial(k, theta) on {0..K}, K >= k.
std::vector<double> binomial_pmf(int k, double theta, int K);

struct PoissonChainInfo {
  int truncation = 0;    // states 0..K on every level
  double tail_mass = 0;  // Poisson(lambda_m) mass above K, removed by renormalization
};

ChainRule<double> poisson_rule(LambdaRule lambda, int depth, PoissonOptions opt = {},
                               PoissonChainInfo* info = nullptr);
LeveledChain<double> poisson_chain(LambdaRule lambda, int depth, PoissonOptions opt = {},
                                   PoissonChainInfo* info = nullptr);

struct BoundCheck {
  double value = 0;  // computed distance on the truncated laws
  double bound = 0;  // analytic bound
  double slack = 0;  // truncation allowance added to the bound
  bool holds = false;
};

/// TV(Poisson(lambda), Poisson(lambda')) against 1 - exp(lambda' - lambda), lambda >= lambda'.
BoundCheck poisson_distance_bound(double lambda, double lambda_prime, double tail = 1e-9);
/// TV(Bin(k, theta), Poisson(k theta)) against k theta^2.
BoundCheck binomial_poisson_bound(int k, double theta, double tail = 1e-9);

}  // namespace filtra

#endif  // FILTRA_CHAIN_HPP
