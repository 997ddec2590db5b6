#include "filtra/bratteli.hpp"

#include <map>

namespace filtra {

const char* to_string(GraphTag t) {
  switch (t) {
    case GraphTag::pascal: return "pascal";
    case GraphTag::euler: return "euler";
    case GraphTag::odometer: return "odometer";
    case GraphTag::next_jump: return "next-jump";
    case GraphTag::multipascal: return "multipascal";
    case GraphTag::custom: return "custom";
  }
  return "custom";
}

BratteliGraph::BratteliGraph(GraphTag tag, int depth, std::vector<SpacePtr> levels,
                             std::vector<std::vector<std::vector<Edge>>> up)
    : tag_(tag), depth_(depth), levels_(std::move(levels)), up_(std::move(up)) {
  if (depth_ > -1) throw Error("graph depth must be <= -1");
  const std::size_t count = static_cast<std::size_t>(-depth_) + 1;
  if (levels_.size() != count) throw Error("graph: one vertex set per level required");
  if (up_.size() != count - 1) throw Error("graph: one edge list per non-root level required");
  if (levels_.back()->size() != 1) throw Error("graph: level 0 must hold a single root");
  for (std::size_t i = 0; i < count; ++i) {
    if (levels_[i]->level() != depth_ + static_cast<int>(i)) throw Error("graph: vertex set carries the wrong level");
    if (levels_[i]->dimension() != levels_[0]->dimension()) throw Error("graph: mixed coordinate dimensions");
  }
  down_.resize(count);
  for (std::size_t i = 0; i < count; ++i) down_[i].resize(levels_[i]->size());
  for (std::size_t i = 0; i + 1 < count; ++i) {
    if (up_[i].size() != levels_[i]->size()) throw Error("graph: one edge list per vertex required");
    for (std::size_t v = 0; v < up_[i].size(); ++v) {
      if (up_[i][v].empty()) throw Error("graph: vertex " + levels_[i]->label(v) + " has no upward edge");
      std::sort(up_[i][v].begin(), up_[i][v].end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
      for (std::size_t k = 0; k < up_[i][v].size(); ++k) {
        const auto& e = up_[i][v][k];
        if (e.mult <= 0) throw Error("graph: multiplicities must be positive");
        if (e.to >= levels_[i + 1]->size()) throw Error("graph: edge target out of range");
        if (k > 0 && up_[i][v][k - 1].to == e.to) throw Error("graph: repeated edge; use multiplicities");
        down_[i + 1][e.to].push_back({v, e.mult});
      }
    }
  }
  for (std::size_t i = 1; i < count; ++i)
    for (std::size_t w = 0; w < down_[i].size(); ++w)
      if (down_[i][w].empty()) throw Error("graph: vertex " + levels_[i]->label(w) + " has no downward edge");
}

std::size_t BratteliGraph::index(int n) const {
  if (n < depth_ || n > 0) throw Error("level " + std::to_string(n) + " outside the graph window");
  return static_cast<std::size_t>(n - depth_);
}

const SpacePtr& BratteliGraph::vertices(int n) const { return levels_[index(n)]; }

const std::vector<Edge>& BratteliGraph::up(int n, std::size_t v) const {
  if (n == 0) throw Error("the root has no upward edges");
  return up_[index(n)].at(v);
}

const std::vector<Edge>& BratteliGraph::down(int n, std::size_t v) const {
  if (n == depth_) throw Error("the deepest level has no downward edges in this window");
  return down_[index(n)].at(v);
}

long BratteliGraph::mult(int n, std::size_t v, std::size_t w) const {
  for (const auto& e : up(n, v))
    if (e.to == w) return e.mult;
  return 0;
}

void BratteliGraph::compute_dims() const { dims_ = path_counts(*this); }

const std::vector<BigInt>& BratteliGraph::dims(int n) const {
  std::call_once(dims_once_, [this] { compute_dims(); });
  return dims_[index(n)];
}

std::vector<std::vector<BigInt>> path_counts(const BratteliGraph& g) {
  std::vector<std::vector<BigInt>> out(static_cast<std::size_t>(-g.depth()) + 1);
  out.back() = {BigInt(1)};
  for (int n = -1; n >= g.depth(); --n) {
    const auto i = static_cast<std::size_t>(n - g.depth());
    out[i].assign(g.vertices(n)->size(), BigInt(0));
    for (std::size_t v = 0; v < out[i].size(); ++v)
      for (const auto& e : g.up(n, v)) out[i][v] += e.mult * out[i + 1][e.to];
  }
  return out;
}

namespace {

std::vector<SpacePtr> ranges(int depth, const std::function<int(int)>& top) {
  std::vector<SpacePtr> out;
  for (int n = depth; n <= 0; ++n) out.push_back(OrderedStateSpace::range(n, 0, top(n)));
  return out;
}

using UpLists = std::vector<std::vector<std::vector<Edge>>>;

UpLists build_up(const std::vector<SpacePtr>& levels,
                 const std::function<std::vector<Edge>(int n, std::size_t v)>& edges) {
  UpLists up(levels.size() - 1);
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    for (std::size_t v = 0; v < levels[i]->size(); ++v) up[i].push_back(edges(levels[i]->level(), v));
  return up;
}

void compositions(int total, std::size_t parts, Coord& cur, std::size_t k, std::vector<Coord>& out) {
  if (k + 1 == parts) {
    cur[k] = total;
    out.push_back(cur);
    return;
  }
  for (int a = 0; a <= total; ++a) {
    cur[k] = a;
    compositions(total - a, parts, cur, k + 1, out);
  }
}

}  // namespace

GraphPtr pascal_graph(int depth) {
  auto levels = ranges(depth, [](int n) { return -n; });
  auto up = build_up(levels, [](int n, std::size_t v) {
    std::vector<Edge> e;
    const std::size_t size = static_cast<std::size_t>(-n);
    if (v >= 1) e.push_back({v - 1, 1});
    if (v + 1 <= size) e.push_back({v, 1});
    return e;
  });
  return std::make_shared<const BratteliGraph>(GraphTag::pascal, depth, std::move(levels), std::move(up));
}

GraphPtr euler_graph(int depth) {
  auto levels = ranges(depth, [](int n) { return -n; });
  auto up = build_up(levels, [](int n, std::size_t v) {
    std::vector<Edge> e;
    const long size = -static_cast<long>(n);
    const long x = static_cast<long>(v);
    if (x >= 1) e.push_back({v - 1, size - x + 1});
    if (x <= size - 1) e.push_back({v, x + 1});
    return e;
  });
  return std::make_shared<const BratteliGraph>(GraphTag::euler, depth, std::move(levels), std::move(up));
}

GraphPtr odometer_graph(int depth) {
  auto levels = ranges(depth, [](int n) { return n == 0 ? 0 : 1; });
  auto up = build_up(levels, [](int n, std::size_t) {
    if (n == -1) return std::vector<Edge>{{0, 1}};
    return std::vector<Edge>{{0, 1}, {1, 1}};
  });
  return std::make_shared<const BratteliGraph>(GraphTag::odometer, depth, std::move(levels), std::move(up));
}

GraphPtr next_jump_graph(int depth) {
  auto levels = ranges(depth, [](int n) { return -n; });
  auto up = build_up(levels, [](int n, std::size_t v) {
    std::vector<Edge> e;
    if (v >= 1) {
      e.push_back({v - 1, 1});
    } else {
      for (std::size_t w = 0; w <= static_cast<std::size_t>(-n - 1); ++w) e.push_back({w, 1});
    }
    return e;
  });
  return std::make_shared<const BratteliGraph>(GraphTag::next_jump, depth, std::move(levels), std::move(up));
}

GraphPtr multipascal_graph(int d, int depth) {
  if (d < 2) throw Error("multipascal needs d >= 2");
  std::vector<SpacePtr> levels;
  for (int n = depth; n <= 0; ++n) {
    std::vector<Coord> states;
    Coord cur(static_cast<std::size_t>(d), 0);
    compositions(-n, static_cast<std::size_t>(d), cur, 0, states);
    levels.push_back(OrderedStateSpace::coordinates(n, std::move(states)));
  }
  UpLists up(levels.size() - 1);
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    for (std::size_t v = 0; v < levels[i]->size(); ++v) {
      std::vector<Edge> e;
      Coord c = levels[i]->state(v);
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] == 0) continue;
        --c[k];
        e.push_back({*levels[i + 1]->index_of(c), 1});
        ++c[k];
      }
      up[i].push_back(std::move(e));
    }
  }
  return std::make_shared<const BratteliGraph>(GraphTag::multipascal, depth, std::move(levels), std::move(up));
}

BigInt eulerian(int n, int k) {
  if (n < 0) throw Error("eulerian: n must be >= 0");
  if (n == 0) return BigInt(k == 0 ? 1 : 0);
  if (k < 0 || k > n - 1) return BigInt(0);
  static std::mutex mu;
  static std::map<std::pair<int, int>, BigInt> memo;
  {
    std::lock_guard lock(mu);
    auto it = memo.find({n, k});
    if (it != memo.end()) return it->second;
  }
  // A(n, k) = (k + 1) A(n-1, k) + (n - k) A(n-1, k-1), filled row by row
  std::vector<BigInt> row{BigInt(1)};
  for (int m = 2; m <= n; ++m) {
    std::vector<BigInt> next(static_cast<std::size_t>(m), BigInt(0));
    for (int j = 0; j < m; ++j) {
      if (j <= m - 2) next[j] += (j + 1) * row[j];
      if (j >= 1) next[j] += (m - j) * row[j - 1];
    }
    row = std::move(next);
  }
  std::lock_guard lock(mu);
  for (int j = 0; j < n; ++j) memo[{n, j}] = row[static_cast<std::size_t>(j)];
  return row[static_cast<std::size_t>(k)];
}

namespace {

BigInt binomial(long n, long k) {
  if (k < 0 || k > n) return BigInt(0);
  BigInt r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return r;
}

BigInt power(long base, long e) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(base), static_cast<unsigned long>(e));
  return r;
}

}  // namespace

BigInt generalized_eulerian_A01(int a, int b) {
  if (a < 0) throw Error("generalized_eulerian_A01: a must be >= 0");
  if (b < 0) return BigInt(0);
  const long big_n = static_cast<long>(a) + b + 1;
  BigInt s(0);
  for (long t = 0; t <= a; ++t) {
    BigInt term = binomial(t + 2, t) * binomial(big_n + 2, a - t) * power(1 + t, big_n - 1);
    if ((a - t) % 2) {
      s -= term;
    } else {
      s += term;
    }
  }
  return s;
}

Rational euler_conditional(int v, int n) {
  if (n > -1) throw Error("euler_conditional needs n <= -1");
  const int size = -n;
  if (v < 0 || v > size) throw Error("euler_conditional: vertex outside level");
  if (v == 0) return Rational(0);
  Rational r(generalized_eulerian_A01(size - v, v - 1), eulerian(size + 1, v));
  r.canonicalize();
  return r;
}

LevelMetric<Rational> closed_form_intrinsic(const BratteliGraph& g, int n, const std::vector<Rational>& weights) {
  if (n > -1 || n < g.depth()) throw Error("closed_form_intrinsic: level outside window");
  const auto& space = g.vertices(n);
  const int size = -n;
  switch (g.tag()) {
    case GraphTag::pascal: {
      std::vector<Rational> phi;
      for (int v = 0; v <= size; ++v) phi.emplace_back(v, size);
      for (auto& p : phi) p.canonicalize();
      return LevelMetric<Rational>::from_embedding(space, std::move(phi));
    }
    case GraphTag::euler: {
      std::vector<Rational> phi;
      for (int v = 0; v <= size; ++v) phi.push_back(euler_conditional(v, n));
      return LevelMetric<Rational>::from_embedding(space, std::move(phi));
    }
    case GraphTag::multipascal: {
      const std::size_t d = g.dimension();
      std::vector<Rational> a = weights;
      if (a.empty()) a.assign(d, Rational(1, static_cast<long>(d)));
      if (a.size() != d) throw Error("closed_form_intrinsic: one weight per coordinate required");
      for (auto& x : a) {
        x /= size;
        x.canonicalize();
      }
      return LevelMetric<Rational>::weighted_l1(space, a);
    }
    default:
      throw Error(std::string("no closed-form intrinsic metric for the ") + to_string(g.tag()) + " graph");
  }
}

}  // namespace filtra
