#ifndef FILTRA_BRATTELI_HPP
#define FILTRA_BRATTELI_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "filtra/chain.hpp"
#include "filtra/kernel.hpp"
#include "filtra/probcore.hpp"
#include "filtra/transport.hpp"

namespace filtra {

struct Edge {
  std::size_t to;  // vertex index on the neighbouring level
  long mult;       // number of parallel edges
};

enum class GraphTag { pascal, euler, odometer, next_jump, multipascal, custom };

const char* to_string(GraphTag t);

// Graded graph on levels depth..0 with a single root at level 0. Edges join
// consecutive levels and carry integer multiplicities.
class BratteliGraph {
 public:
  /// up[n - depth][v] lists the edges from vertex v of level n to level n+1 (n < 0).
  BratteliGraph(GraphTag tag, int depth, std::vector<SpacePtr> levels, std::vector<std::vector<std::vector<Edge>>> up);

  GraphTag tag() const { return tag_; }
  int depth() const { return depth_; }
  /// Dimension of the coordinate vectors (1 for one-dimensional graphs).
  std::size_t dimension() const { return levels_.front()->dimension(); }

  const SpacePtr& vertices(int n) const;
  const std::vector<Edge>& up(int n, std::size_t v) const;
  const std::vector<Edge>& down(int n, std::size_t v) const;
  long mult(int n, std::size_t v, std::size_t w) const;

  /// Number of paths from each vertex of level n to the root.
  const std::vector<BigInt>& dims(int n) const;
  const BigInt& dim(int n, std::size_t v) const { return dims(n)[v]; }

 private:
  std::size_t index(int n) const;
  void compute_dims() const;

  GraphTag tag_;
  int depth_;
  std::vector<SpacePtr> levels_;
  std::vector<std::vector<std::vector<Edge>>> up_;
  std::vector<std::vector<std::vector<Edge>>> down_;
  mutable std::once_flag dims_once_;
  mutable std::vector<std::vector<BigInt>> dims_;
};

using GraphPtr = std::shared_ptr<const BratteliGraph>;

GraphPtr pascal_graph(int depth);
GraphPtr euler_graph(int depth);
GraphPtr odometer_graph(int depth);
GraphPtr next_jump_graph(int depth);
GraphPtr multipascal_graph(int d, int depth);

/// Path counts by dynamic programming from the root downward.
std::vector<std::vector<BigInt>> path_counts(const BratteliGraph& g);

/// A(n, k): permutations of n letters with k descents; 0 outside 0 <= k <= n-1.
BigInt eulerian(int n, int k);
/// A_{0,1}(a, b) by its alternating sum; counts Euler-graph paths from vertex b+1 at
/// level -(a+b+1) to vertex 1 at level -1. Zero for b < 0.
BigInt generalized_eulerian_A01(int a, int b);
/// P(V_{-1} = 1 | V_n = v) on the Euler graph under any central measure.
Rational euler_conditional(int v, int n);

/// Row v of the central kernel from level n to n+1: mult(v,w) dim(w) / dim(v).
template <Numeric T>
LevelKernel<T> central_kernel(const BratteliGraph& g, int n) {
  if (n < g.depth() || n >= 0) throw Error("central_kernel: level outside graph window");
  const auto& src = g.vertices(n);
  std::vector<SparseRow<T>> rows(src->size());
  for (std::size_t v = 0; v < src->size(); ++v) {
    for (const auto& e : g.up(n, v)) {
      Rational w(BigInt(e.mult * g.dim(n + 1, e.to)), g.dim(n, v));
      if constexpr (Num<T>::exact) {
        w.canonicalize();
        rows[v].push_back({e.to, w});
      } else {
        rows[v].push_back({e.to, w.get_d()});
      }
    }
    if constexpr (!Num<T>::exact) {
      double s = 0;
      for (const auto& e : rows[v]) s += e.weight;
      for (auto& e : rows[v]) e.weight /= s;
    }
  }
  return LevelKernel<T>(src, g.vertices(n + 1), std::move(rows));
}

/// Multi-step central kernel of the Pascal and multipascal graphs: from v at level `from`,
/// the vertex at level `to` is w <= v with probability M(v - w) M(w) / M(v), M the multinomial coefficient.
template <Numeric T>
LevelKernel<T> hypergeometric_kernel(const BratteliGraph& g, int from, int to) {
  if (g.tag() != GraphTag::pascal && g.tag() != GraphTag::multipascal)
    throw Error("hypergeometric_kernel needs a Pascal-type graph");
  if (from >= to || from < g.depth() || to > 0) throw Error("hypergeometric_kernel: bad levels");
  const auto& src = g.vertices(from);
  const auto& dst = g.vertices(to);
  const int total = -from;
  // log-factorials for floats, exact factorials otherwise
  std::vector<BigInt> fact;
  std::vector<double> lfact;
  if constexpr (Num<T>::exact) {
    fact.push_back(BigInt(1));
    for (int i = 1; i <= total; ++i) fact.push_back(fact.back() * i);
  } else {
    lfact.push_back(0.0);
    for (int i = 1; i <= total; ++i) lfact.push_back(lfact.back() + std::log(static_cast<double>(i)));
  }
  const bool one_dim = g.tag() == GraphTag::pascal;
  std::vector<SparseRow<T>> rows(src->size());
  for (std::size_t v = 0; v < src->size(); ++v) {
    // pascal vertex v counts ones out of |from|; as a composition it is (v, |from| - v)
    Coord cv = one_dim ? Coord{src->value(v), total - src->value(v)} : src->state(v);
    Coord cw(cv.size(), 0);
    auto emit = [&](auto&& self, std::size_t k, int left) -> void {
      if (k + 1 == cv.size()) {
        if (left > cv[k]) return;
        cw[k] = left;
        std::size_t w = one_dim ? *dst->index_of({cw[0]}) : *dst->index_of(cw);
        if constexpr (Num<T>::exact) {
          BigInt num = fact[static_cast<std::size_t>(total + to)] * fact[static_cast<std::size_t>(-to)];
          BigInt den = fact[static_cast<std::size_t>(total)];
          for (std::size_t i = 0; i < cv.size(); ++i) {
            den *= fact[static_cast<std::size_t>(cv[i] - cw[i])] * fact[static_cast<std::size_t>(cw[i])];
            num *= fact[static_cast<std::size_t>(cv[i])];
          }
          Rational r(num, den);
          r.canonicalize();
          rows[v].push_back({w, r});
        } else {
          double l = lfact[static_cast<std::size_t>(total + to)] + lfact[static_cast<std::size_t>(-to)] -
                     lfact[static_cast<std::size_t>(total)];
          for (std::size_t i = 0; i < cv.size(); ++i)
            l += lfact[static_cast<std::size_t>(cv[i])] - lfact[static_cast<std::size_t>(cv[i] - cw[i])] -
                 lfact[static_cast<std::size_t>(cw[i])];
          rows[v].push_back({w, std::exp(l)});
        }
        return;
      }
      for (int a = 0; a <= std::min(cv[k], left); ++a) {
        cw[k] = a;
        self(self, k + 1, left - a);
      }
    };
    emit(emit, 0, -to);
    if constexpr (!Num<T>::exact) {
      double s = 0;
      for (const auto& e : rows[v]) s += e.weight;
      for (auto& e : rows[v]) e.weight /= s;
    }
  }
  return LevelKernel<T>(src, dst, std::move(rows));
}

// A measure on paths described by its downward rule: the law of V_{n-1}
// given V_n = w, as a sparse row over level n-1.
template <Numeric T>
struct DownwardRule {
  std::string name;
  std::function<SparseRow<T>(int n, std::size_t w)> step;
};

template <Numeric T>
DownwardRule<T> bernoulli_rule(const T& p) {
  // Pascal: V counts the ones; a one is added going down with probability p
  return {"bernoulli(" + Num<T>::to_string(p) + ")", [p](int, std::size_t w) {
            return SparseRow<T>{{w, T(Num<T>::one() - p)}, {w + 1, p}};
          }};
}

template <Numeric T>
DownwardRule<T> symmetric_euler_rule() {
  // uniform over the |n|+2 downward edges: v+1 to v, |n|+1-v to v+1
  return {"symmetric", [](int n, std::size_t w) {
            const long m = -static_cast<long>(n);
            const long v = static_cast<long>(w);
            return SparseRow<T>{{w, Num<T>::ratio(v + 1, m + 2)}, {w + 1, Num<T>::ratio(m + 1 - v, m + 2)}};
          }};
}

template <Numeric T>
DownwardRule<T> multinomial_rule(const GraphPtr& g, std::vector<T> theta) {
  std::string name = "multinomial(";
  for (std::size_t i = 0; i < theta.size(); ++i) name += (i ? "," : "") + Num<T>::to_string(theta[i]);
  name += ")";
  return {name, [g, theta](int n, std::size_t w) {
            auto here = g->vertices(n);
            auto below = g->vertices(n - 1);
            SparseRow<T> row;
            Coord c = here->state(w);
            for (std::size_t i = 0; i < theta.size(); ++i) {
              ++c[i];
              row.push_back({*below->index_of(c), theta[i]});
              --c[i];
            }
            return row;
          }};
}

/// Uniform over the downward edges counted with multiplicity.
template <Numeric T>
DownwardRule<T> uniform_edge_rule(const GraphPtr& g) {
  return {"uniform-edges", [g](int n, std::size_t w) {
            long total = 0;
            for (const auto& e : g->down(n, w)) total += e.mult;
            SparseRow<T> row;
            for (const auto& e : g->down(n, w)) row.push_back({e.to, Num<T>::ratio(e.mult, total)});
            return row;
          }};
}

/// Laws of V_n for n = depth..0 by propagating the downward rule from the root.
template <Numeric T>
std::vector<Dist<T>> backward_marginals(const BratteliGraph& g, const DownwardRule<T>& rule) {
  std::vector<Dist<T>> out;
  out.push_back(Dist<T>::point_mass(g.vertices(0), 0));
  for (int n = 0; n > g.depth(); --n) {
    const auto& cur = out.back();
    std::vector<T> w(g.vertices(n - 1)->size(), Num<T>::zero());
    for (std::size_t v = 0; v < cur.size(); ++v) {
      if (Num<T>::is_zero(cur[v], 0.0)) continue;
      for (const auto& e : rule.step(n, v)) w.at(e.index) += cur[v] * e.weight;
    }
    if constexpr (Num<T>::exact) {
      out.push_back(Dist<T>(g.vertices(n - 1), std::move(w)));
    } else {
      out.push_back(make_dist<T>(g.vertices(n - 1), std::move(w)));
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

/// Forward kernel from level n to n+1 by Bayes' rule from the downward rule and the marginals.
template <Numeric T>
LevelKernel<T> bayes_kernel(const BratteliGraph& g, const DownwardRule<T>& rule, const std::vector<Dist<T>>& marginals,
                            int n) {
  const auto& lower = marginals.at(static_cast<std::size_t>(n - g.depth()));
  const auto& upper = marginals.at(static_cast<std::size_t>(n + 1 - g.depth()));
  std::vector<SparseRow<T>> rows(lower.size());
  for (std::size_t w = 0; w < upper.size(); ++w) {
    if (Num<T>::is_zero(upper[w], 0.0)) continue;
    for (const auto& e : rule.step(n + 1, w)) {
      if (Num<T>::is_zero(lower[e.index], 0.0)) continue;
      rows[e.index].push_back({w, T(upper[w] * e.weight / lower[e.index])});
    }
  }
  for (std::size_t v = 0; v < rows.size(); ++v)
    if (rows[v].empty()) throw Error("bayes_kernel: vertex outside the support of the measure");
  return LevelKernel<T>(g.vertices(n), g.vertices(n + 1), std::move(rows));
}

// The vertex walk of a central measure: central kernels forward, marginals
// from the measure's downward rule.
template <Numeric T>
struct CentralChain {
  GraphPtr graph;
  DownwardRule<T> measure;
  std::vector<Dist<T>> marginals;  // levels depth..0
  std::shared_ptr<const LeveledChain<T>> chain;

  const Dist<T>& marginal(int n) const { return marginals.at(static_cast<std::size_t>(n - graph->depth())); }
};

// Central kernels computed once per level and shared between a chain and its coupler.
template <Numeric T>
class CentralKernels {
 public:
  explicit CentralKernels(GraphPtr g) : g_(std::move(g)), k_(static_cast<std::size_t>(-g_->depth())) {}

  /// Kernel from level n to n+1.
  std::shared_ptr<const LevelKernel<T>> from(int n) const {
    const auto i = static_cast<std::size_t>(n - g_->depth());
    {
      std::lock_guard lock(mu_);
      if (i < k_.size() && k_[i]) return k_[i];
    }
    auto k = std::make_shared<const LevelKernel<T>>(central_kernel<T>(*g_, n));
    std::lock_guard lock(mu_);
    k_.at(i) = k;
    return k;
  }

 private:
  GraphPtr g_;
  mutable std::mutex mu_;
  mutable std::vector<std::shared_ptr<const LevelKernel<T>>> k_;
};

/// Quantile coupler for one-dimensional graphs, well-ordered partition coupler for multipascal.
template <Numeric T>
Coupler<T> central_coupler(const GraphPtr& g, std::shared_ptr<const CentralKernels<T>> kernels);

template <Numeric T>
CentralChain<T> central_chain(GraphPtr g, DownwardRule<T> measure) {
  CentralChain<T> c;
  c.graph = g;
  c.measure = measure;
  c.marginals = backward_marginals(*g, measure);
  ChainRule<T> r;
  r.name = std::string(to_string(g->tag())) + ":" + measure.name;
  r.space = [g](int n) { return g->vertices(n); };
  auto kernels = std::make_shared<const CentralKernels<T>>(g);
  r.kernel_into = [kernels](int n) { return *kernels->from(n - 1); };
  auto marg = std::make_shared<std::vector<Dist<T>>>(c.marginals);
  r.seed = [g, marg](int n) { return marg->at(static_cast<std::size_t>(n - g->depth())); };
  r.coupler = central_coupler<T>(g, kernels);
  if (g->tag() == GraphTag::pascal || g->tag() == GraphTag::multipascal) {
    r.composer = [g](int from, int to) { return hypergeometric_kernel<T>(*g, from, to); };
  }
  c.chain = std::make_shared<const LeveledChain<T>>(r, g->depth());
  return c;
}

template <Numeric T>
CentralChain<T> bernoulli_pascal_chain(const T& p, int depth) {
  if (!Num<T>::positive(p, 0.0) || !Num<T>::lt(p, Num<T>::one(), 0.0)) throw Error("p must lie in (0, 1)");
  auto g = pascal_graph(depth);
  return central_chain<T>(g, bernoulli_rule<T>(p));
}

template <Numeric T>
CentralChain<T> symmetric_euler_chain(int depth) {
  return central_chain<T>(euler_graph(depth), symmetric_euler_rule<T>());
}

template <Numeric T>
CentralChain<T> multinomial_multipascal_chain(const std::vector<T>& theta, int depth) {
  if (theta.size() < 2) throw Error("multipascal needs d >= 2");
  T s = Num<T>::zero();
  for (const auto& t : theta) {
    if (!Num<T>::positive(t, 0.0)) throw Error("theta entries must be positive");
    s += t;
  }
  if (!Num<T>::eq(s, Num<T>::one())) throw Error("theta must sum to 1");
  auto g = multipascal_graph(static_cast<int>(theta.size()), depth);
  return central_chain<T>(g, multinomial_rule<T>(g, theta));
}

template <Numeric T>
CentralChain<T> odometer_chain(int depth) {
  auto g = odometer_graph(depth);
  return central_chain<T>(g, uniform_edge_rule<T>(g));
}

template <Numeric T>
CentralChain<T> next_jump_chain(int depth) {
  auto g = next_jump_graph(depth);
  return central_chain<T>(g, uniform_edge_rule<T>(g));
}

/// Canonical well-ordered coupling of the multipascal rows of v and v' at level n:
/// positions 1..|n| are split into blocks A_i (sizes v(i)) and A'_i (sizes v'(i)),
/// shared coordinates (v(i) = v'(i)) first with identical blocks, the rest in
/// coordinate order; a uniform position u moves v to v - e_i (u in A_i) and v' to v' - e_j (u in A'_j).
template <Numeric T>
CouplingPlan<T> wellordered_coupling_multipascal(const BratteliGraph& g, int n, std::size_t v, std::size_t vp);

/// The same coupling as a sparse list over (target of v, target of v').
template <Numeric T>
std::vector<PairMass<T>> partition_coupling(const BratteliGraph& g, int n, std::size_t v, std::size_t vp) {
  const auto& here = g.vertices(n);
  const auto& above = g.vertices(n + 1);
  const Coord& a = here->state(v);
  const Coord& b = here->state(vp);
  const std::size_t d = a.size();
  const int size = -n;
  int sa = 0, sb = 0;
  for (std::size_t i = 0; i < d; ++i) {
    sa += a[i];
    sb += b[i];
  }
  if (sa != size || sb != size) throw Error("partition coupling: coordinate sums differ from |n|");
  std::vector<std::size_t> la, lb;
  for (std::size_t i = 0; i < d; ++i)
    if (a[i] == b[i])
      for (int k = 0; k < a[i]; ++k) {
        la.push_back(i);
        lb.push_back(i);
      }
  for (std::size_t i = 0; i < d; ++i)
    if (a[i] != b[i]) la.insert(la.end(), static_cast<std::size_t>(a[i]), i);
  for (std::size_t i = 0; i < d; ++i)
    if (a[i] != b[i]) lb.insert(lb.end(), static_cast<std::size_t>(b[i]), i);
  std::vector<PairMass<T>> out;
  const T unit = Num<T>::ratio(1, size);
  for (std::size_t u = 0; u < la.size(); ++u) {
    Coord x = a, y = b;
    --x[la[u]];
    --y[lb[u]];
    std::size_t ix = *above->index_of(x), iy = *above->index_of(y);
    auto it = std::find_if(out.begin(), out.end(), [&](const PairMass<T>& p) { return p.a == ix && p.b == iy; });
    if (it == out.end()) {
      out.push_back({ix, iy, unit});
    } else {
      it->weight += unit;
    }
  }
  return out;
}

template <Numeric T>
CouplingPlan<T> wellordered_coupling_multipascal(const BratteliGraph& g, int n, std::size_t v, std::size_t vp) {
  const auto& above = g.vertices(n + 1);
  Matrix<T> joint(above->size(), above->size(), Num<T>::zero());
  for (const auto& p : partition_coupling<T>(g, n, v, vp)) joint(p.a, p.b) += p.weight;
  return CouplingPlan<T>(above, above, std::move(joint));
}

template <Numeric T>
Coupler<T> central_coupler(const GraphPtr& g, std::shared_ptr<const CentralKernels<T>> kernels) {
  if (g->tag() == GraphTag::multipascal) {
    return [g](int level, std::size_t x, std::size_t y) { return partition_coupling<T>(*g, level, x, y); };
  }
  if (!g->vertices(g->depth())->totally_ordered()) return {};
  return [kernels](int level, std::size_t x, std::size_t y) {
    UpdatingFunction<T> f(kernels->from(level));
    return f.common_step(x, y);
  };
}

// Edge-label representation of one transition: for each source vertex the
// unit interval is cut into one piece per edge (labels 1..k, blocks in
// increasing target order, equal lengths within a block).
template <Numeric T>
struct LabelInterval {
  T lo;
  T hi;
  long label;
  std::size_t target;
};

template <Numeric T>
struct LabelStep {
  int level;  // target level n; sources live on level n-1
  std::vector<std::vector<LabelInterval<T>>> rows;
};

template <Numeric T>
struct LabelProcess {
  GraphPtr graph;
  std::vector<LabelStep<T>> steps;  // target levels depth+1..0
};

template <Numeric T>
LabelProcess<T> label_process(const CentralChain<T>& c) {
  LabelProcess<T> out;
  out.graph = c.graph;
  const auto& g = *c.graph;
  for (int n = g.depth() + 1; n <= 0; ++n) {
    auto k = c.chain->kernel_into(n);
    LabelStep<T> step{n, {}};
    for (std::size_t v = 0; v < k->sources(); ++v) {
      std::vector<LabelInterval<T>> row;
      T lo = Num<T>::zero();
      long label = 1;
      auto edges = g.up(n - 1, v);
      std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
      for (const auto& e : edges) {
        T piece = (*k)(v, e.to) / Num<T>::from_int(BigInt(e.mult));
        for (long i = 0; i < e.mult; ++i) {
          T hi = lo + piece;
          row.push_back({lo, hi, label++, e.to});
          lo = hi;
        }
      }
      step.rows.push_back(std::move(row));
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

/// Positions P(V_{-1} = 1 | V_n = v) for a one-dimensional central chain, n <= -1.
template <Numeric T>
std::vector<T> embedding_coordinates(const CentralChain<T>& c, int n) {
  if (c.graph->dimension() != 1 || !c.graph->vertices(n)->totally_ordered())
    throw Error("embedding needs a one-dimensional graph");
  if (n > -1 || n < c.graph->depth()) throw Error("embedding level outside window");
  if (c.graph->vertices(-1)->size() != 2) throw Error("embedding needs two vertices at level -1");
  std::vector<T> pos;
  if (n == -1) {
    pos = {Num<T>::zero(), Num<T>::one()};
    return pos;
  }
  auto k = compose_kernels(*c.chain, n, -1);
  for (std::size_t v = 0; v < k.sources(); ++v) pos.push_back(k(v, 1));
  return pos;
}

/// Closed-form intrinsic metric at level n <= -1 (from the discrete metric at level -1, or
/// the weighted l1 metric there for multipascal).
LevelMetric<Rational> closed_form_intrinsic(const BratteliGraph& g, int n,
                                            const std::vector<Rational>& weights = {});

}  // namespace filtra

#endif  // FILTRA_BRATTELI_HPP
