#ifndef FILTRA_TRANSPORT_HPP
#define FILTRA_TRANSPORT_HPP

#include <omp.h>

#include <cstdint>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "filtra/kernel.hpp"
#include "filtra/parallel.hpp"
#include "filtra/probcore.hpp"

namespace filtra {

enum class MetricKind { metric, pseudometric };

// A (pseudo)metric on the states of one level. Stored either as a dense
// symmetric matrix or, for linear metrics, as a nondecreasing embedding phi
// with rho(x, y) = |phi(x) - phi(y)|.
template <Numeric T>
class LevelMetric {
 public:
  /// Validates nonnegativity, zero diagonal, symmetry and (optionally) the triangle inequality.
  static LevelMetric from_matrix(SpacePtr space, Matrix<T> values, bool check_triangle = true) {
    const std::size_t n = space->size();
    if (values.rows() != n || values.cols() != n) throw Error("LevelMetric: matrix shape does not match space");
    for (std::size_t i = 0; i < n; ++i) {
      if (!Num<T>::is_zero(values(i, i))) throw Error("LevelMetric: nonzero diagonal");
      for (std::size_t j = 0; j < n; ++j) {
        if (Num<T>::negative(values(i, j))) throw Error("LevelMetric: negative distance");
        if (!Num<T>::eq(values(i, j), values(j, i))) throw Error("LevelMetric: matrix is not symmetric");
      }
    }
    if (check_triangle) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k)
            if (!Num<T>::le(values(i, k), T(values(i, j) + values(j, k)), 1e-10))
              throw Error("LevelMetric: triangle inequality fails at (" + space->label(i) + "," + space->label(j) +
                          "," + space->label(k) + ")");
    }
    return trusted(std::move(space), std::move(values));
  }

  /// Skips validation; used for lifted metrics, which are metrics by construction.
  static LevelMetric trusted(SpacePtr space, Matrix<T> values, std::optional<MetricKind> kind = std::nullopt) {
    LevelMetric m;
    m.space_ = std::move(space);
    const std::size_t n = m.space_->size();
    bool positive = true;
    for (std::size_t i = 0; i < n && positive; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (!Num<T>::positive(values(i, j), 0.0)) {
          positive = false;
          break;
        }
    m.kind_ = kind.value_or(positive ? MetricKind::metric : MetricKind::pseudometric);
    if (m.space_->totally_ordered() && n > 0) {
      std::vector<T> phi(n);
      bool linear = true;
      for (std::size_t i = 0; i < n && linear; ++i) {
        phi[i] = values(0, i);
        if (i > 0 && Num<T>::lt(phi[i], phi[i - 1])) linear = false;
      }
      for (std::size_t i = 0; i < n && linear; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (!Num<T>::eq(values(i, j), T(phi[j] - phi[i]))) {
            linear = false;
            break;
          }
      if (linear) m.phi_ = std::move(phi);
    }
    m.values_ = std::move(values);
    return m;
  }

  /// rho(x, y) = |phi(x) - phi(y)|; phi must be nondecreasing in the state order.
  static LevelMetric from_embedding(SpacePtr space, std::vector<T> phi) {
    if (!space->totally_ordered()) throw Error("LevelMetric: embeddings need a totally ordered space");
    if (phi.size() != space->size()) throw Error("LevelMetric: embedding length does not match space");
    bool strict = true;
    for (std::size_t i = 1; i < phi.size(); ++i) {
      if (Num<T>::lt(phi[i], phi[i - 1], 0.0)) throw Error("LevelMetric: embedding must be nondecreasing");
      if (!Num<T>::lt(phi[i - 1], phi[i], 0.0)) strict = false;
    }
    LevelMetric m;
    m.space_ = std::move(space);
    m.phi_ = std::move(phi);
    m.kind_ = strict ? MetricKind::metric : MetricKind::pseudometric;
    return m;
  }

  static LevelMetric discrete(SpacePtr space) {
    const std::size_t n = space->size();
    if (space->totally_ordered() && n <= 2) {
      std::vector<T> phi(n, Num<T>::zero());
      if (n == 2) phi[1] = Num<T>::one();
      auto m = from_embedding(std::move(space), std::move(phi));
      m.discrete_ = true;
      return m;
    }
    Matrix<T> v(n, n, Num<T>::one());
    for (std::size_t i = 0; i < n; ++i) v(i, i) = Num<T>::zero();
    LevelMetric m;
    m.space_ = std::move(space);
    m.values_ = std::move(v);
    m.kind_ = MetricKind::metric;
    m.discrete_ = true;
    return m;
  }

  /// |x - y| on the state values of a totally ordered space.
  static LevelMetric absolute(SpacePtr space) {
    if (!space->totally_ordered()) throw Error("absolute metric needs a totally ordered space");
    std::vector<T> phi;
    phi.reserve(space->size());
    for (std::size_t i = 0; i < space->size(); ++i) phi.push_back(Num<T>::from_int(BigInt(space->value(i))));
    return from_embedding(std::move(space), std::move(phi));
  }

  /// sum_k a_k |x(k) - y(k)| on coordinate vectors.
  static LevelMetric weighted_l1(SpacePtr space, const std::vector<T>& weights) {
    if (weights.size() != space->dimension()) throw Error("weighted_l1: one weight per coordinate required");
    for (const auto& a : weights)
      if (!Num<T>::positive(a, 0.0)) throw Error("weighted_l1: weights must be positive");
    if (space->totally_ordered()) {
      std::vector<T> phi;
      for (std::size_t i = 0; i < space->size(); ++i)
        phi.push_back(weights[0] * Num<T>::from_int(BigInt(space->value(i))));
      return from_embedding(std::move(space), std::move(phi));
    }
    const std::size_t n = space->size();
    Matrix<T> v(n, n, Num<T>::zero());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        T acc = Num<T>::zero();
        const auto& x = space->state(i);
        const auto& y = space->state(j);
        for (std::size_t k = 0; k < x.size(); ++k) acc += weights[k] * Num<T>::from_int(BigInt(std::abs(x[k] - y[k])));
        v(i, j) = acc;
        v(j, i) = acc;
      }
    return trusted(std::move(space), std::move(v));
  }

  const SpacePtr& space() const { return space_; }
  std::size_t size() const { return space_->size(); }
  MetricKind kind() const { return kind_; }
  bool is_metric() const { return kind_ == MetricKind::metric; }
  bool linear() const { return !phi_.empty() || size() == 0; }
  bool is_discrete() const { return discrete_; }

  /// The monotone embedding of a linear metric.
  const std::vector<T>& embedding() const {
    if (phi_.empty()) throw Error("metric is not linear");
    return phi_;
  }

  T operator()(std::size_t i, std::size_t j) const {
    if (values_) return (*values_)(i, j);
    return i <= j ? T(phi_[j] - phi_[i]) : T(phi_[i] - phi_[j]);
  }

  Matrix<T> matrix() const {
    if (values_) return *values_;
    const std::size_t n = size();
    Matrix<T> v(n, n, Num<T>::zero());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) v(i, j) = (*this)(i, j);
    return v;
  }

  T diameter() const {
    if (!values_) return phi_.empty() ? Num<T>::zero() : T(phi_.back() - phi_.front());
    T best = Num<T>::zero();
    for (const auto& v : values_->data())
      if (v > best) best = v;
    return best;
  }

  /// FNV-1a over level, representation and values; identifies a metric in lift caches.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ull;
      }
    };
    auto mix_value = [&](const T& v) {
      if constexpr (Num<T>::exact) {
        auto s = v.get_str();
        mix(s.data(), s.size());
        mix("|", 1);
      } else {
        mix(&v, sizeof v);
      }
    };
    int level = space_->level();
    mix(&level, sizeof level);
    std::size_t n = size();
    mix(&n, sizeof n);
    if (values_) {
      for (const auto& v : values_->data()) mix_value(v);
    } else {
      mix("phi", 3);
      for (const auto& v : phi_) mix_value(v);
    }
    return h;
  }

 private:
  LevelMetric() = default;

  SpacePtr space_;
  std::optional<Matrix<T>> values_;
  std::vector<T> phi_;
  MetricKind kind_ = MetricKind::pseudometric;
  bool discrete_ = false;
};

template <Numeric T>
struct Flow {
  std::size_t row;
  std::size_t col;
  T amount;
};

template <Numeric T>
struct TransportSolution {
  T cost;
  std::vector<Flow<T>> flows;  // basic cells with positive flow
  std::vector<T> u;            // row potentials
  std::vector<T> v;            // column potentials; u_i + v_j <= c_ij, equality on the flows
  std::size_t pivots = 0;
};

// Transportation simplex. Start from the northwest-corner basis, price with
// u-v potentials, enter the first negative reduced cost in row-major order
// and leave the smallest-index minimum-flow cell (Bland), which rules out
// cycling on degenerate bases. Supplies and demands must be positive and
// balanced (exactly, or within 1e-9 in float mode).
template <Numeric T>
TransportSolution<T> solve_transport(std::vector<T> supply, std::vector<T> demand, const Matrix<T>& cost) {
  const std::size_t m = supply.size(), n = demand.size();
  if (m == 0 || n == 0) throw Error("transport: empty supply or demand");
  if (cost.rows() != m || cost.cols() != n) throw Error("transport: cost shape mismatch");
  T sa = Num<T>::zero(), sb = Num<T>::zero();
  for (const auto& a : supply) {
    if (!Num<T>::positive(a, 0.0)) throw Error("transport: supplies must be positive");
    sa += a;
  }
  for (const auto& b : demand) {
    if (!Num<T>::positive(b, 0.0)) throw Error("transport: demands must be positive");
    sb += b;
  }
  if constexpr (Num<T>::exact) {
    if (sa != sb) throw Error("transport: unbalanced problem");
  } else {
    if (std::fabs(sa - sb) > 1e-9) throw Error("transport: unbalanced problem");
    demand.back() += sa - sb;
  }

  const std::size_t nodes = m + n;
  std::vector<std::size_t> bi, bj;  // basic cells
  std::vector<T> flow;
  Matrix<int> slot(m, n, -1);
  {
    std::vector<T> a = supply, b = demand;
    std::size_t i = 0, j = 0;
    while (true) {
      const bool row_first = a[i] <= b[j];
      T x = row_first ? a[i] : b[j];
      slot(i, j) = static_cast<int>(bi.size());
      bi.push_back(i);
      bj.push_back(j);
      flow.push_back(x);
      a[i] -= x;
      b[j] -= x;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) {
        ++j;
      } else if (j == n - 1) {
        ++i;
      } else if (row_first) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  if constexpr (!Num<T>::exact) {
    for (auto& f : flow)
      if (f < 0) f = 0;
  }

  double scale = 1.0;
  if constexpr (!Num<T>::exact) {
    for (double c : cost.data()) scale = std::max(scale, std::fabs(c));
  }
  const double tol = 1e-12 * scale;

  std::vector<T> u(m), v(n);
  std::vector<char> known(nodes);
  std::vector<std::vector<std::size_t>> adj(nodes);  // node -> basic cell ids
  std::vector<std::size_t> parent_cell(nodes);
  std::vector<std::size_t> queue;
  auto node_other = [&](std::size_t cell, std::size_t node) { return node < m ? m + bj[cell] : bi[cell]; };

  TransportSolution<T> out;
  const std::size_t pivot_cap = 50 * (m * n + nodes) + 1000;
  for (;;) {
    for (auto& a : adj) a.clear();
    for (std::size_t c = 0; c < bi.size(); ++c) {
      adj[bi[c]].push_back(c);
      adj[m + bj[c]].push_back(c);
    }
    // potentials along the basis tree, u_0 = 0
    std::fill(known.begin(), known.end(), 0);
    queue.assign(1, 0);
    known[0] = 1;
    u[0] = Num<T>::zero();
    for (std::size_t q = 0; q < queue.size(); ++q) {
      std::size_t node = queue[q];
      for (auto c : adj[node]) {
        std::size_t other = node_other(c, node);
        if (known[other]) continue;
        known[other] = 1;
        if (other >= m) {
          v[other - m] = cost(bi[c], bj[c]) - u[bi[c]];
        } else {
          u[other] = cost(bi[c], bj[c]) - v[bj[c]];
        }
        queue.push_back(other);
      }
    }
    if (queue.size() != nodes) throw Error("transport: basis is not a spanning tree");

    std::optional<std::pair<std::size_t, std::size_t>> enter;
    for (std::size_t i = 0; i < m && !enter; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (slot(i, j) >= 0) continue;
        T d = cost(i, j) - u[i] - v[j];
        if (Num<T>::negative(d, tol)) {
          enter = {i, j};
          break;
        }
      }
    if (!enter) break;
    if (++out.pivots > pivot_cap) throw Error("transport: pivot limit exceeded");

    // tree path from column node of the entering cell back to its row node
    const auto [ei, ej] = *enter;
    std::fill(known.begin(), known.end(), 0);
    queue.assign(1, m + ej);
    known[m + ej] = 1;
    for (std::size_t q = 0; q < queue.size() && !known[ei]; ++q) {
      std::size_t node = queue[q];
      for (auto c : adj[node]) {
        std::size_t other = node_other(c, node);
        if (known[other]) continue;
        known[other] = 1;
        parent_cell[other] = c;
        queue.push_back(other);
      }
    }
    std::vector<std::size_t> path;  // cells from row ei back to column ej
    for (std::size_t node = ei; node != m + ej;) {
      std::size_t c = parent_cell[node];
      path.push_back(c);
      node = node_other(c, node);
    }
    // path[0] touches row ei and gives up flow; signs alternate from there
    std::optional<std::size_t> leave;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      std::size_t c = path[k];
      if (!leave) {
        leave = c;
        continue;
      }
      std::size_t l = *leave;
      if (flow[c] < flow[l] || (flow[c] == flow[l] && bi[c] * n + bj[c] < bi[l] * n + bj[l])) leave = c;
    }
    const T theta = flow[*leave];
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k % 2 == 0) {
        flow[path[k]] -= theta;
      } else {
        flow[path[k]] += theta;
      }
    }
    const std::size_t l = *leave;
    slot(bi[l], bj[l]) = -1;
    bi[l] = ei;
    bj[l] = ej;
    flow[l] = theta;
    slot(ei, ej) = static_cast<int>(l);
    if constexpr (!Num<T>::exact) {
      for (auto& f : flow)
        if (f < 0) f = 0;
    }
  }

  out.cost = Num<T>::zero();
  for (std::size_t c = 0; c < bi.size(); ++c) {
    if (!Num<T>::positive(flow[c], 0.0)) continue;
    out.cost += flow[c] * cost(bi[c], bj[c]);
    out.flows.push_back({bi[c], bj[c], flow[c]});
  }
  std::sort(out.flows.begin(), out.flows.end(),
            [](const Flow<T>& a, const Flow<T>& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  if constexpr (!Num<T>::exact) {
    double dual = 0.0;
    for (std::size_t i = 0; i < m; ++i) dual += supply[i] * u[i];
    for (std::size_t j = 0; j < n; ++j) dual += demand[j] * v[j];
    if (std::fabs(dual - out.cost) > 1e-9 * scale) throw Error("transport: duality gap above 1e-9");
  }
  out.u = std::move(u);
  out.v = std::move(v);
  return out;
}

enum class TransportMethod {
  automatic,  // total variation for discrete metrics, CDF formula for linear ones, simplex otherwise
  simplex,    // always the transportation simplex
};

/// W1 between two sparse laws on the metric's space.
template <Numeric T>
T kantorovich_rows(std::span<const Entry<T>> a, std::span<const Entry<T>> b, const LevelMetric<T>& rho,
                   TransportMethod method = TransportMethod::automatic) {
  if (method == TransportMethod::automatic && (rho.is_discrete() || rho.linear())) {
    const bool line = rho.linear();
    T acc = Num<T>::zero();
    T diff = Num<T>::zero();  // running cdf(a) - cdf(b), or pointwise difference for TV
    std::size_t i = 0, j = 0;
    std::size_t prev = 0;
    bool started = false;
    const std::vector<T>* phi = line ? &rho.embedding() : nullptr;
    while (i < a.size() || j < b.size()) {
      std::size_t idx = std::min(i < a.size() ? a[i].index : SIZE_MAX, j < b.size() ? b[j].index : SIZE_MAX);
      if (line) {
        if (started) acc += Num<T>::abs(diff) * ((*phi)[idx] - (*phi)[prev]);
        if (i < a.size() && a[i].index == idx) diff += a[i++].weight;
        if (j < b.size() && b[j].index == idx) diff -= b[j++].weight;
        prev = idx;
        started = true;
      } else {
        T d = Num<T>::zero();
        if (i < a.size() && a[i].index == idx) d += a[i++].weight;
        if (j < b.size() && b[j].index == idx) d -= b[j++].weight;
        acc += Num<T>::abs(d);
      }
    }
    return line ? acc : T(acc / 2);
  }
  if (a.empty() || b.empty()) throw Error("kantorovich: empty law");
  std::vector<T> supply, demand;
  for (const auto& e : a) supply.push_back(e.weight);
  for (const auto& e : b) demand.push_back(e.weight);
  Matrix<T> cost(a.size(), b.size(), Num<T>::zero());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) cost(i, j) = rho(a[i].index, b[j].index);
  return solve_transport(std::move(supply), std::move(demand), cost).cost;
}

template <Numeric T>
T kantorovich(const Dist<T>& mu, const Dist<T>& nu, const LevelMetric<T>& rho,
              TransportMethod method = TransportMethod::automatic) {
  require_same_space(mu.space(), nu.space(), "kantorovich");
  require_same_space(mu.space(), rho.space(), "kantorovich");
  auto a = sparse_of(mu);
  auto b = sparse_of(nu);
  return kantorovich_rows<T>(a, b, rho, method);
}

/// Optimal value, an optimal plan, and the dual potentials (indexed by state; zero off the supports).
template <Numeric T>
struct KantorovichSolution {
  T value;
  CouplingPlan<T> plan;
  std::vector<T> u;
  std::vector<T> v;
};

template <Numeric T>
KantorovichSolution<T> kantorovich_solution(const Dist<T>& mu, const Dist<T>& nu, const LevelMetric<T>& rho) {
  require_same_space(mu.space(), nu.space(), "kantorovich");
  require_same_space(mu.space(), rho.space(), "kantorovich");
  auto a = sparse_of(mu);
  auto b = sparse_of(nu);
  std::vector<T> supply, demand;
  for (const auto& e : a) supply.push_back(e.weight);
  for (const auto& e : b) demand.push_back(e.weight);
  Matrix<T> cost(a.size(), b.size(), Num<T>::zero());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) cost(i, j) = rho(a[i].index, b[j].index);
  auto sol = solve_transport(std::move(supply), std::move(demand), cost);
  Matrix<T> joint(mu.size(), nu.size(), Num<T>::zero());
  for (const auto& f : sol.flows) joint(a[f.row].index, b[f.col].index) = f.amount;
  std::vector<T> u(mu.size(), Num<T>::zero()), v(nu.size(), Num<T>::zero());
  for (std::size_t i = 0; i < a.size(); ++i) u[a[i].index] = sol.u[i];
  for (std::size_t j = 0; j < b.size(); ++j) v[b[j].index] = sol.v[j];
  return {sol.cost, CouplingPlan<T>(mu.space(), nu.space(), std::move(joint)), std::move(u), std::move(v)};
}

/// W1 for a linear metric via the CDF formula sum |F_mu - F_nu| (phi_{i+1} - phi_i).
template <Numeric T>
T kantorovich_line(const Dist<T>& mu, const Dist<T>& nu, const LevelMetric<T>& rho) {
  require_same_space(mu.space(), nu.space(), "kantorovich_line");
  require_same_space(mu.space(), rho.space(), "kantorovich_line");
  if (!rho.linear() || !rho.space()->totally_ordered()) throw Error("kantorovich_line: metric is not linear");
  const auto& phi = rho.embedding();
  T acc = Num<T>::zero();
  T diff = Num<T>::zero();
  for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
    diff += mu[i] - nu[i];
    acc += Num<T>::abs(diff) * (phi[i + 1] - phi[i]);
  }
  return acc;
}

struct LiftOptions {
  TransportMethod method = TransportMethod::automatic;
  bool parallel = true;
};

/// rho_n(x, x') = W1(K(x, .), K(x', .); rho_next) for the kernel K from level n to n+1.
template <Numeric T>
LevelMetric<T> lift_metric(const LevelMetric<T>& next, const LevelKernel<T>& k, LiftOptions opt = {}) {
  require_same_space(next.space(), k.target(), "lift_metric");
  const std::size_t n = k.sources();
  const bool fast = opt.method == TransportMethod::automatic;

  // monotone kernel and linear metric: the lift is linear with embedding K phi
  if (fast && next.linear() && k.source()->totally_ordered() && k.target()->totally_ordered() &&
      kernel_monotone(k)) {
    const auto& phi = next.embedding();
    std::vector<T> psi(n, Num<T>::zero());
    for (std::size_t x = 0; x < n; ++x)
      for (const auto& e : k.row_entries(x)) psi[x] += e.weight * phi[e.index];
    if constexpr (!Num<T>::exact) {
      // roundoff can break monotonicity between equal rows
      for (std::size_t x = 1; x < n; ++x)
        if (psi[x] < psi[x - 1]) psi[x] = psi[x - 1];
    }
    return LevelMetric<T>::from_embedding(k.source(), std::move(psi));
  }

  Matrix<T> values(n, n, Num<T>::zero());
  auto pair_value = [&](std::size_t x, std::size_t y) {
    if (k.same_row(x, y, 0.0)) return Num<T>::zero();
    return kantorovich_rows<T>(k.row_entries(x), k.row_entries(y), next, opt.method);
  };
  if (opt.parallel) {
    FirstError err;
#pragma omp parallel for schedule(dynamic) num_threads(thread_budget())
    for (long x = 0; x < static_cast<long>(n); ++x) {
      err.run([&] {
        for (std::size_t y = static_cast<std::size_t>(x) + 1; y < n; ++y) {
          T d = pair_value(static_cast<std::size_t>(x), y);
          values(static_cast<std::size_t>(x), y) = d;
          values(y, static_cast<std::size_t>(x)) = d;
        }
      });
    }
    err.rethrow();
  } else {
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = x + 1; y < n; ++y) {
        T d = pair_value(x, y);
        values(x, y) = d;
        values(y, x) = d;
      }
  }
  auto kind = next.is_metric() && rows_distinct(k) ? MetricKind::metric : MetricKind::pseudometric;
  return LevelMetric<T>::trusted(k.source(), std::move(values), kind);
}

/// Single-threaded reference for lift_metric.
template <Numeric T>
LevelMetric<T> lift_metric_serial(const LevelMetric<T>& next, const LevelKernel<T>& k,
                                  TransportMethod method = TransportMethod::automatic) {
  return lift_metric(next, k, LiftOptions{method, false});
}

// Lifted metrics keyed by (source level, fingerprint of the metric lifted).
// One cache serves one chain; concurrent readers are guarded by a mutex.
template <Numeric T>
class LiftCache {
 public:
  LevelMetric<T> lift(const LevelMetric<T>& next, const LevelKernel<T>& k, LiftOptions opt = {}) {
    Key key{k.source()->level(), next.fingerprint(), opt.method == TransportMethod::automatic};
    {
      std::lock_guard lock(mu_);
      if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
      }
    }
    auto out = lift_metric(next, k, opt);
    std::lock_guard lock(mu_);
    entries_.emplace(key, out);
    return out;
  }

  std::size_t hits() const {
    std::lock_guard lock(mu_);
    return hits_;
  }

 private:
  using Key = std::tuple<int, std::uint64_t, bool>;
  mutable std::mutex mu_;
  std::map<Key, LevelMetric<T>> entries_;
  std::size_t hits_ = 0;
};

}  // namespace filtra

#endif  // FILTRA_TRANSPORT_HPP
