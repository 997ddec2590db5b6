#ifndef FILTRA_STANDARDNESS_HPP
#define FILTRA_STANDARDNESS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "filtra/chain.hpp"
#include "filtra/parallel.hpp"
#include "filtra/rng.hpp"
#include "filtra/transport.hpp"

namespace filtra {

// Metrics rho_n for n = bottom..top, each the Kantorovich lift of the one above.
// Holds a reference to the chain, which must outlive the ladder.
template <Numeric T>
class MetricLadder {
 public:
  MetricLadder(const LeveledChain<T>& chain, int top, std::vector<LevelMetric<T>> metrics)
      : chain_(&chain), top_(top), metrics_(std::move(metrics)) {
    if (metrics_.empty()) throw Error("empty metric ladder");
  }

  const LeveledChain<T>& chain() const { return *chain_; }
  int top() const { return top_; }
  int bottom() const { return top_ - static_cast<int>(metrics_.size()) + 1; }
  bool contains(int n) const { return n >= bottom() && n <= top_; }

  const LevelMetric<T>& at(int n) const {
    if (!contains(n)) throw Error("level " + std::to_string(n) + " outside the metric ladder");
    return metrics_[static_cast<std::size_t>(top_ - n)];
  }
  bool linear(int n) const { return at(n).linear(); }
  MetricKind kind(int n) const { return at(n).kind(); }

 private:
  const LeveledChain<T>* chain_;
  int top_;
  std::vector<LevelMetric<T>> metrics_;  // top first
};

template <Numeric T>
MetricLadder<T> intrinsic_metrics(const LeveledChain<T>& chain, int n0, LevelMetric<T> rho0, int m,
                                  LiftOptions opt = {}) {
  if (m > n0 || n0 > 0) throw Error("intrinsic_metrics needs m <= n0 <= 0");
  if (!chain.contains(m)) throw Error("intrinsic_metrics: level " + std::to_string(m) + " outside the chain window");
  require_same_space(rho0.space(), chain.space(n0), "intrinsic_metrics");
  std::vector<LevelMetric<T>> out;
  out.push_back(std::move(rho0));
  for (int n = n0 - 1; n >= m; --n) out.push_back(lift_metric(out.back(), *chain.kernel_from(n), opt));
  return MetricLadder<T>(chain, n0, std::move(out));
}

/// E[rho(X, X')] for two independent draws from mu.
template <Numeric T>
T vprime_statistic(const Dist<T>& mu, const LevelMetric<T>& rho) {
  require_same_space(mu.space(), rho.space(), "vprime_statistic");
  T acc = Num<T>::zero();
  if (rho.linear()) {
    // 2 * sum over gaps of (phi_{i+1} - phi_i) F_i (1 - F_i)
    const auto& phi = rho.embedding();
    T f = Num<T>::zero();
    for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
      f += mu[i];
      acc += (phi[i + 1] - phi[i]) * f * (Num<T>::one() - f);
    }
    return acc + acc;
  }
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (Num<T>::is_zero(mu[x], 0.0)) continue;
    for (std::size_t y = 0; y < mu.size(); ++y)
      if (!Num<T>::is_zero(mu[y], 0.0)) acc += mu[x] * mu[y] * rho(x, y);
  }
  return acc;
}

template <Numeric T>
T vprime_statistic(const MetricLadder<T>& ladder, int n) {
  return vprime_statistic(ladder.chain().marginal(n), ladder.at(n));
}

/// s_m = sum_x mu_m(x) W(L(X_n | X_m = x), mu_n) for a metric rho on level n.
template <Numeric T>
T tail_criterion_statistic(const LeveledChain<T>& chain, int n, int m, const LevelMetric<T>& rho) {
  if (m >= n) throw Error("tail_criterion_statistic needs m < n");
  require_same_space(rho.space(), chain.space(n), "tail_criterion_statistic");
  auto k = compose_kernels(chain, m, n);
  auto target = sparse_of(chain.marginal(n));
  const auto& mu = chain.marginal(m);
  T acc = Num<T>::zero();
  for (std::size_t x = 0; x < mu.size(); ++x)
    if (!Num<T>::is_zero(mu[x], 0.0)) acc += mu[x] * kantorovich_rows<T>(k.row_entries(x), target, rho);
  return acc;
}

enum class CheckStatus { holds, violated, not_applicable };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::holds: return "holds";
    case CheckStatus::violated: return "violated";
    default: return "not applicable";
  }
}

struct CheckResult {
  CheckStatus status = CheckStatus::holds;
  std::string detail;  // first violation, or why the check does not apply
  long compared = 0;   // pairs (or rows) examined

  bool holds() const { return status == CheckStatus::holds; }
};

/// Ladder rho_n(y, z) against the Kantorovich distance of the composed rows to the top level
/// and against the common-innovation expectation, for every pair at level n.
template <Numeric T>
CheckResult vprime_equals_conditional_kantorovich(const MetricLadder<T>& ladder, int n,
                                                  std::size_t cap = 4'000'000) {
  const auto& chain = ladder.chain();
  const int top = ladder.top();
  CheckResult r;
  if (n == top) return r;
  const auto& rho0 = ladder.at(top);
  if (!rho0.linear()) return {CheckStatus::not_applicable, "initial metric is not linear", 0};
  for (int l = n + 1; l <= top; ++l)
    if (!chain.space(l - 1)->totally_ordered() || !monotonicity_check(*chain.kernel_into(l)))
      return {CheckStatus::not_applicable, "chain is not monotone into level " + std::to_string(l), 0};
  auto k = compose_kernels(chain, n, top);
  const auto& rho = ladder.at(n);
  const double tol = Num<T>::exact ? 0.0 : 1e-9;
  const auto& space = chain.space(n);
  for (std::size_t y = 0; y < space->size(); ++y)
    for (std::size_t z = y + 1; z < space->size(); ++z) {
      T a = rho(y, z);
      T b = kantorovich_rows<T>(k.row_entries(y), k.row_entries(z), rho0);
      T c = exact_pair_expectation(chain, n, y, z, top, rho0, cap);
      ++r.compared;
      if (!Num<T>::eq(a, b, tol) || !Num<T>::eq(a, c, tol)) {
        r.status = CheckStatus::violated;
        r.detail = "level " + std::to_string(n) + " pair (" + space->label(y) + "," + space->label(z) +
                   "): ladder " + Num<T>::to_string(a) + ", composed " + Num<T>::to_string(b) + ", joint " +
                   Num<T>::to_string(c);
        return r;
      }
    }
  return r;
}

/// Support of the plan respects the coordinatewise order of (x, x').
template <Numeric T>
bool well_ordered_check(const CouplingPlan<T>& plan, const Coord& x, const Coord& xp) {
  const auto& rs = plan.row_space();
  const auto& cs = plan.col_space();
  if (x.size() != xp.size() || rs->dimension() != x.size() || cs->dimension() != x.size())
    throw Error("well_ordered_check: dimension mismatch");
  for (std::size_t i = 0; i < rs->size(); ++i)
    for (std::size_t j = 0; j < cs->size(); ++j) {
      if (Num<T>::is_zero(plan(i, j), 0.0)) continue;
      const auto& y = rs->state(i);
      const auto& yp = cs->state(j);
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] <= xp[k] && y[k] > yp[k]) return false;
        if (x[k] >= xp[k] && y[k] < yp[k]) return false;
      }
    }
  return true;
}

/// Whether a pair (y, y') respects the order of (x, x') in every coordinate.
inline bool pair_well_ordered(const Coord& x, const Coord& xp, const Coord& y, const Coord& yp) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] <= xp[k] && y[k] > yp[k]) return false;
    if (x[k] >= xp[k] && y[k] < yp[k]) return false;
  }
  return true;
}

/// A coupling of mu and nu that is well-ordered with respect to (x, x'), if one exists:
/// transport with cost 1 on order-violating pairs and 0 elsewhere has optimum 0.
template <Numeric T>
std::optional<CouplingPlan<T>> well_ordered_coupling(const Dist<T>& mu, const Dist<T>& nu, const Coord& x,
                                                     const Coord& xp) {
  auto a = sparse_of(mu);
  auto b = sparse_of(nu);
  std::vector<T> supply, demand;
  for (const auto& e : a) supply.push_back(e.weight);
  for (const auto& e : b) demand.push_back(e.weight);
  Matrix<T> cost(a.size(), b.size(), Num<T>::zero());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!pair_well_ordered(x, xp, mu.space()->state(a[i].index), nu.space()->state(b[j].index)))
        cost(i, j) = Num<T>::one();
  auto sol = solve_transport(std::move(supply), std::move(demand), cost);
  if (!Num<T>::is_zero(sol.cost, 1e-12)) return std::nullopt;
  Matrix<T> joint(mu.size(), nu.size(), Num<T>::zero());
  for (const auto& f : sol.flows) joint(a[f.row].index, b[f.col].index) = f.amount;
  return CouplingPlan<T>(mu.space(), nu.space(), std::move(joint));
}

/// Law of the k-th coordinate of each row, as (coordinate value, mass) sorted by value.
template <Numeric T>
std::vector<std::pair<int, T>> coordinate_row(const LevelKernel<T>& kern, std::size_t x, std::size_t k) {
  std::map<int, T> acc;
  for (const auto& e : kern.row_entries(x)) {
    auto [it, fresh] = acc.try_emplace(kern.target()->state(e.index)[k], e.weight);
    if (!fresh) it->second += e.weight;
  }
  return {acc.begin(), acc.end()};
}

/// L(X_{n+1}(k) | X_n = v) depends on v only through v(k), at every transition of the window.
template <Numeric T>
CheckResult coordinate_immersion_check(const LeveledChain<T>& chain, std::size_t k) {
  CheckResult r;
  const double tol = Num<T>::exact ? 0.0 : 1e-12;
  for (int n = chain.depth(); n < 0; ++n) {
    auto kern = chain.kernel_from(n);
    if (k >= kern->source()->dimension()) throw Error("coordinate index out of range");
    std::map<int, std::vector<std::pair<int, T>>> seen;
    for (std::size_t v = 0; v < kern->sources(); ++v) {
      auto row = coordinate_row(*kern, v, k);
      ++r.compared;
      auto [it, fresh] = seen.try_emplace(kern->source()->state(v)[k], row);
      if (fresh) continue;
      bool same = it->second.size() == row.size();
      for (std::size_t i = 0; same && i < row.size(); ++i)
        same = it->second[i].first == row[i].first && Num<T>::eq(it->second[i].second, row[i].second, tol);
      if (!same) {
        r.status = CheckStatus::violated;
        r.detail = "level " + std::to_string(n) + ": coordinate " + std::to_string(k) + " law differs at " +
                   kern->source()->label(v);
        return r;
      }
    }
  }
  return r;
}

/// The k-th coordinate as a chain of its own (valid when the immersion check holds).
template <Numeric T>
ChainRule<T> coordinate_rule(std::shared_ptr<const LeveledChain<T>> chain, std::size_t k) {
  auto values = [chain, k](int n) {
    std::vector<int> vals;
    const auto& s = chain->space(n);
    for (std::size_t v = 0; v < s->size(); ++v) vals.push_back(s->state(v)[k]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return OrderedStateSpace::total(n, vals);
  };
  ChainRule<T> r;
  r.name = chain->name() + "[" + std::to_string(k) + "]";
  r.space = values;
  r.kernel_into = [chain, k, values](int n) {
    auto src = values(n - 1);
    auto dst = values(n);
    auto kern = chain->kernel_into(n);
    std::vector<SparseRow<T>> rows(src->size());
    std::vector<char> done(src->size(), 0);
    for (std::size_t v = 0; v < kern->sources(); ++v) {
      auto i = *src->index_of({kern->source()->state(v)[k]});
      if (done[i]) continue;
      done[i] = 1;
      for (const auto& [value, mass] : coordinate_row(*kern, v, k)) rows[i].push_back({*dst->index_of({value}), mass});
    }
    return LevelKernel<T>(src, dst, std::move(rows));
  };
  r.seed = [chain, k, values](int n) {
    auto s = values(n);
    const auto& mu = chain->marginal(n);
    std::vector<T> w(s->size(), Num<T>::zero());
    for (std::size_t v = 0; v < mu.size(); ++v) w[*s->index_of({mu.space()->state(v)[k]})] += mu[v];
    return Dist<T>(s, std::move(w));
  };
  return r;
}

template <Numeric T>
struct CoordinateWeights {
  std::vector<T> a;

  explicit CoordinateWeights(std::vector<T> weights) : a(std::move(weights)) {
    if (a.empty()) throw Error("coordinate weights must not be empty");
    T s = Num<T>::zero();
    for (const auto& x : a) {
      if (!Num<T>::positive(x, 0.0)) throw Error("coordinate weights must be positive");
      s += x;
    }
    if (!Num<T>::eq(s, Num<T>::one(), 1e-12)) throw Error("coordinate weights must sum to 1");
  }
  static CoordinateWeights uniform(std::size_t d) {
    return CoordinateWeights(std::vector<T>(d, Num<T>::ratio(1, static_cast<long>(d))));
  }
  std::size_t dimension() const { return a.size(); }
};

/// Every transition admits a coupling of the two rows that is well-ordered for the pair of sources.
/// The chain's own coupler is tried first, then the 0/1 transport problem.
template <Numeric T>
CheckResult well_ordered_transitions(const LeveledChain<T>& chain, int from, int to) {
  CheckResult r;
  for (int n = from; n < to; ++n) {
    auto kern = chain.kernel_from(n);
    const auto& s = kern->source();
    for (std::size_t x = 0; x < s->size(); ++x)
      for (std::size_t y = x + 1; y < s->size(); ++y) {
        ++r.compared;
        bool ok = false;
        if (chain.has_coupler()) {
          Matrix<T> joint(kern->targets(), kern->targets(), Num<T>::zero());
          for (const auto& p : chain.couple(n, x, y)) joint(p.a, p.b) += p.weight;
          ok = well_ordered_check(CouplingPlan<T>(kern->target(), kern->target(), std::move(joint)), s->state(x),
                                  s->state(y));
        }
        if (!ok) ok = well_ordered_coupling(kern->row(x), kern->row(y), s->state(x), s->state(y)).has_value();
        if (!ok) {
          r.status = CheckStatus::violated;
          r.detail = "no well-ordered coupling at level " + std::to_string(n) + " for (" + s->label(x) + "," +
                     s->label(y) + ")";
          return r;
        }
      }
  }
  return r;
}

/// Joint ladder from sum_k a_k |x(k) - x'(k)| at level n0 against sum_k a_k delta^k_n, where
/// delta^k is the ladder of the k-th coordinate chain from |x(k) - x'(k)|.
template <Numeric T>
CheckResult metric_decomposition_check(std::shared_ptr<const LeveledChain<T>> chain, const CoordinateWeights<T>& w,
                                       int n0, int m) {
  const std::size_t d = chain->space(n0)->dimension();
  if (w.dimension() != d) throw Error("metric_decomposition_check: one weight per coordinate required");
  for (std::size_t k = 0; k < d; ++k) {
    auto imm = coordinate_immersion_check(*chain, k);
    if (!imm.holds()) return {CheckStatus::not_applicable, "coordinates are not immersed: " + imm.detail, 0};
  }
  auto wo = well_ordered_transitions(*chain, m, n0);
  if (!wo.holds()) return {CheckStatus::not_applicable, "not monotone in the coordinate order: " + wo.detail, 0};

  auto joint = intrinsic_metrics(*chain, n0, LevelMetric<T>::weighted_l1(chain->space(n0), w.a), m);
  std::vector<std::unique_ptr<LeveledChain<T>>> coords;
  std::vector<MetricLadder<T>> deltas;
  for (std::size_t k = 0; k < d; ++k) {
    coords.push_back(std::make_unique<LeveledChain<T>>(coordinate_rule<T>(chain, k), chain->depth()));
    deltas.push_back(intrinsic_metrics(*coords.back(), n0, LevelMetric<T>::absolute(coords.back()->space(n0)), m));
  }
  CheckResult r;
  for (int n = m; n <= n0; ++n) {
    const auto& s = chain->space(n);
    for (std::size_t x = 0; x < s->size(); ++x)
      for (std::size_t y = x + 1; y < s->size(); ++y) {
        T sum = Num<T>::zero();
        for (std::size_t k = 0; k < d; ++k) {
          const auto& cs = coords[k]->space(n);
          sum += w.a[k] * deltas[k].at(n)(*cs->index_of({s->state(x)[k]}), *cs->index_of({s->state(y)[k]}));
        }
        ++r.compared;
        if (!Num<T>::eq(joint.at(n)(x, y), sum, Num<T>::exact ? 0.0 : 1e-9)) {
          r.status = CheckStatus::violated;
          r.detail = "level " + std::to_string(n) + " pair (" + s->label(x) + "," + s->label(y) + "): joint " +
                     Num<T>::to_string(joint.at(n)(x, y)) + ", weighted sum " + Num<T>::to_string(sum);
          return r;
        }
      }
  }
  return r;
}

struct CascadeConfig {
  std::vector<int> starts;         // n_1 > n_2 > ... > n_J
  int to = 0;                      // level where start states are scored
  std::vector<int> report_levels;  // defaults to the starts and `to`
  StartPolicy policy = StartPolicy::minimizing;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct CascadeCell {
  std::size_t j;  // pair (Z^j, Z^{j+1}), 1-based
  int level;
  MCEstimate estimate;
};

struct CascadeTable {
  std::vector<int> starts;
  std::vector<std::size_t> start_states;
  std::vector<int> report_levels;
  std::vector<CascadeCell> cells;

  /// Estimate for pair j at a level, if that cell was simulated.
  std::optional<MCEstimate> at(std::size_t j, int level) const {
    for (const auto& c : cells)
      if (c.j == j && c.level == level) return c.estimate;
    return std::nullopt;
  }
};

using PointMetric = std::function<double(int level, std::size_t x, std::size_t y)>;

// Z^j starts at x_{n_j}, moves on its own until n_{j-1}, then moves with Z^{j-1}
// through the chain's coupler: given Z^{j-1}'s step, Z^j draws from the coupling
// conditioned on that step.
template <Numeric T>
CascadeTable coupling_cascade_simulation(const LeveledChain<T>& chain, const LevelMetric<T>& rho_to,
                                         const PointMetric& metric, CascadeConfig cfg) {
  if (!chain.has_coupler()) throw Error("chain '" + chain.name() + "' has no coupling constructor");
  if (cfg.starts.size() < 2) throw Error("cascade needs at least two start levels");
  for (std::size_t j = 1; j < cfg.starts.size(); ++j)
    if (cfg.starts[j] >= cfg.starts[j - 1]) throw Error("cascade start levels must decrease");
  if (cfg.starts.front() >= cfg.to) throw Error("cascade starts must lie below the scoring level");
  if (!chain.contains(cfg.starts.back()) || !chain.contains(cfg.to)) throw Error("cascade levels outside window");
  if (cfg.report_levels.empty()) {
    cfg.report_levels = cfg.starts;
    cfg.report_levels.push_back(cfg.to);
    std::sort(cfg.report_levels.begin(), cfg.report_levels.end());
  }
  for (int l : cfg.report_levels)
    if (l > cfg.to) throw Error("report levels must not exceed the scoring level");
  const std::size_t J = cfg.starts.size();
  const int bottom = cfg.starts.back();

  CascadeTable table;
  table.starts = cfg.starts;
  table.report_levels = cfg.report_levels;
  for (int s : cfg.starts) table.start_states.push_back(choose_start(chain, s, cfg.to, rho_to, cfg.policy));

  std::vector<UpdatingFunction<T>> steps;  // into levels bottom+1 .. to
  for (int l = bottom + 1; l <= cfg.to; ++l) steps.emplace_back(chain.kernel_into(l));

  // cells: pair j (1-based) at level l when l >= n_j
  std::vector<std::pair<std::size_t, int>> cells;
  for (std::size_t j = 1; j < J; ++j)
    for (int l : cfg.report_levels)
      if (l >= cfg.starts[j - 1]) cells.push_back({j, l});
  std::vector<std::vector<double>> values(cells.size(), std::vector<double>(cfg.trials, 0.0));

  CounterRng rng(cfg.seed);
  auto one = [&](std::size_t trial) {
    std::vector<std::size_t> z(J, 0);
    std::vector<char> active(J, 0);
    auto record = [&](int level) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (cells[c].second == level) {
          const std::size_t j = cells[c].first;
          values[c][trial] = metric(level, z[j - 1], z[j]);
        }
    };
    for (int l = bottom; l <= cfg.to; ++l) {
      if (l > bottom) {
        const auto& f = steps[static_cast<std::size_t>(l - bottom - 1)];
        std::vector<std::size_t> next(J);
        for (std::size_t j = 0; j < J; ++j) {
          if (!active[j]) continue;
          const double u = rng.uniform(2 + j, trial, l);
          if (j == 0 || l - 1 < cfg.starts[j - 1]) {
            next[j] = f(z[j], u);
            continue;
          }
          // coupled with Z^{j-1}: condition its joint step on the move already drawn
          auto joint = chain.couple(l - 1, z[j - 1], z[j]);
          double total = 0.0;
          for (const auto& p : joint)
            if (p.a == next[j - 1]) total += Num<T>::to_double(p.weight);
          if (!(total > 0.0)) throw Error("cascade coupling does not reach the drawn step");
          double acc = 0.0;
          next[j] = SIZE_MAX;
          for (const auto& p : joint) {
            if (p.a != next[j - 1]) continue;
            next[j] = p.b;
            acc += Num<T>::to_double(p.weight);
            if (u * total < acc) break;
          }
        }
        for (std::size_t j = 0; j < J; ++j)
          if (active[j]) z[j] = next[j];
      }
      for (std::size_t j = 0; j < J; ++j)
        if (cfg.starts[j] == l) {
          active[j] = 1;
          z[j] = table.start_states[j];
        }
      record(l);
    }
  };
  if (cfg.parallel) {
    FirstError err;
#pragma omp parallel for schedule(static) num_threads(thread_budget())
    for (long t = 0; t < static_cast<long>(cfg.trials); ++t) err.run([&] { one(static_cast<std::size_t>(t)); });
    err.rethrow();
  } else {
    for (std::size_t t = 0; t < cfg.trials; ++t) one(t);
  }
  for (std::size_t c = 0; c < cells.size(); ++c) table.cells.push_back({cells[c].first, cells[c].second, summarize(values[c])});
  return table;
}

enum class Verdict { consistent, inconsistent, inconclusive };

const char* to_string(Verdict v);

struct VerdictRule {
  double floor = 0.05;      // "bounded away from 0" threshold
  double decay_tol = 0.05;  // fitted log-log slopes above -decay_tol count as no decay
};

/// Least-squares slope of log(value) against log(|n|); -infinity when the column reaches 0.
double fitted_decay_exponent(const std::vector<int>& sizes, const std::vector<double>& values);

/// Classification of one statistic column over increasing |n|.
Verdict classify_column(const std::vector<int>& sizes, const std::vector<double>& values, const VerdictRule& rule);

/// Combined verdict: a column that reads "consistent" wins unless another reads "inconsistent".
Verdict combine_verdicts(const std::vector<Verdict>& columns);

struct StandardnessRow {
  int level = 0;
  Scalar vprime;
  Scalar tail;
  std::optional<bool> monotone;      // kernel from this level to the next
  std::optional<bool> identifiable;
};

struct StandardnessConfig {
  std::vector<int> window;  // |n| values, increasing
  int n0 = 0;               // level of the initial metric and of the tail criterion
  VerdictRule rule;
  LiftOptions lift;
};

struct StandardnessReport {
  static constexpr int kSchemaVersion = 1;
  std::string chain;
  std::string mode;
  std::string initial_metric;
  StandardnessConfig config;
  std::vector<StandardnessRow> rows;
  double vprime_slope = 0.0;
  double tail_slope = 0.0;
  Verdict vprime_verdict = Verdict::inconclusive;
  Verdict tail_verdict = Verdict::inconclusive;
  Verdict verdict = Verdict::inconclusive;

  std::string to_text() const;
  std::string to_json() const;
};

template <Numeric T>
StandardnessReport standardness_report(const LeveledChain<T>& chain, const LevelMetric<T>& rho0,
                                       StandardnessConfig cfg, const std::string& metric_name) {
  if (cfg.window.empty()) throw Error("standardness window is empty");
  std::sort(cfg.window.begin(), cfg.window.end());
  cfg.window.erase(std::unique(cfg.window.begin(), cfg.window.end()), cfg.window.end());
  const int deepest = -cfg.window.back();
  for (int w : cfg.window)
    if (-w >= cfg.n0) throw Error("window levels must lie below the initial metric level");
  auto ladder = intrinsic_metrics(chain, cfg.n0, rho0, deepest, cfg.lift);
  StandardnessReport rep;
  rep.chain = chain.name();
  rep.mode = Num<T>::exact ? "exact" : "float";
  rep.initial_metric = metric_name;
  rep.config = cfg;
  std::vector<double> vp, tl;
  for (int w : cfg.window) {
    const int n = -w;
    StandardnessRow row;
    row.level = n;
    row.vprime = Scalar::of(vprime_statistic(ladder, n));
    row.tail = Scalar::of(tail_criterion_statistic(chain, cfg.n0, n, rho0));
    auto k = chain.kernel_from(n);
    if (k->source()->totally_ordered() && k->target()->totally_ordered()) row.monotone = monotonicity_check(*k);
    row.identifiable = identifiability_check(*k);
    vp.push_back(row.vprime.to_double());
    tl.push_back(row.tail.to_double());
    rep.rows.push_back(std::move(row));
  }
  rep.vprime_slope = fitted_decay_exponent(cfg.window, vp);
  rep.tail_slope = fitted_decay_exponent(cfg.window, tl);
  rep.vprime_verdict = classify_column(cfg.window, vp, cfg.rule);
  rep.tail_verdict = classify_column(cfg.window, tl, cfg.rule);
  rep.verdict = combine_verdicts({rep.vprime_verdict, rep.tail_verdict});
  return rep;
}

}  // namespace filtra

#endif  // FILTRA_STANDARDNESS_HPP
