// Acceptance criteria, one PASS/FAIL line each. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "../unit/helpers.hpp"
#include "filtra/bratteli.hpp"
#include "filtra/cli.hpp"
#include "filtra/standardness.hpp"

using namespace filtra;
using testing_support::q;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first failure message; later checks still run.
class Checker {
 public:
  bool check(bool ok, const std::string& what) {
    if (!ok) {
      ++failures_;
      if (first_.empty()) first_ = what;
    }
    return ok;
  }
  Outcome done(std::string summary) const {
    if (failures_ == 0) return {true, std::move(summary)};
    return {false, first_ + (failures_ > 1 ? " (+" + std::to_string(failures_ - 1) + " more)" : "")};
  }

 private:
  int failures_ = 0;
  std::string first_;
};

std::string num(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// ---- independent oracles ----

BigInt binomial(long n, long k) {
  if (k < 0 || k > n) return BigInt(0);
  std::vector<BigInt> row{BigInt(1)};
  for (long m = 1; m <= n; ++m) {
    std::vector<BigInt> next(static_cast<std::size_t>(m + 1), BigInt(1));
    for (long j = 1; j < m; ++j) next[j] = row[j - 1] + row[j];
    row = std::move(next);
  }
  return row[static_cast<std::size_t>(k)];
}

// Eulerian numbers by the recurrence A(n,k) = (k+1) A(n-1,k) + (n-k) A(n-1,k-1).
std::vector<std::vector<BigInt>> eulerian_table(int nmax) {
  std::vector<std::vector<BigInt>> a(static_cast<std::size_t>(nmax + 1));
  a[0] = {BigInt(1)};
  for (int n = 1; n <= nmax; ++n) {
    a[n].assign(static_cast<std::size_t>(n), BigInt(0));
    for (int k = 0; k < n; ++k) {
      if (k < n - 1) a[n][k] += (k + 1) * a[n - 1][k];
      if (k >= 1) a[n][k] += (n - k) * a[n - 1][k - 1];
    }
    if (n == 1) a[1][0] = 1;
  }
  return a;
}

// Paths in the Euler graph from (n, v) to vertex 1 at level -1, from the multiplicity rule alone:
// v at level n has v+1 edges up to v (when v <= |n|-1) and |n|-v+1 edges up to v-1 (when v >= 1).
std::vector<std::vector<BigInt>> euler_paths_to_one(int depth) {
  std::vector<std::vector<BigInt>> p(static_cast<std::size_t>(depth + 1));
  p[1] = {BigInt(0), BigInt(1)};
  for (int m = 2; m <= depth; ++m) {
    p[m].assign(static_cast<std::size_t>(m + 1), BigInt(0));
    for (int v = 0; v <= m; ++v) {
      if (v <= m - 1) p[m][v] += (v + 1) * p[m - 1][v];
      if (v >= 1) p[m][v] += (m - v + 1) * p[m - 1][v - 1];
    }
  }
  return p;
}

double log_factorial(int k) { return std::lgamma(k + 1.0); }

double poisson_p(double lambda, int k) { return std::exp(k * std::log(lambda) - lambda - log_factorial(k)); }

double binomial_p(int n, double p, int k) {
  if (k < 0 || k > n) return 0;
  if (p == 0) return k == 0 ? 1 : 0;
  return std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

// TV(Bin(k, theta), Poisson(k theta)) on {0..support}, plus the Poisson mass past support.
double tv_binomial_poisson(int k, double theta, int support) {
  double s = 0, pm = 0;
  for (int j = 0; j <= support; ++j) {
    const double pp = poisson_p(k * theta, j);
    s += std::fabs(binomial_p(k, theta, j) - pp);
    pm += pp;
  }
  return 0.5 * (s + (1 - pm));
}

double tv_poisson(double a, double b) {
  double s = 0;
  const int top = static_cast<int>(std::max(a, b) + 40 * std::sqrt(std::max(a, b)) + 40);
  for (int j = 0; j <= top; ++j) s += std::fabs(poisson_p(a, j) - poisson_p(b, j));
  return 0.5 * s;
}

// ---- criteria ----

Outcome pascal_metrics() {
  Checker c;
  auto t0 = std::chrono::steady_clock::now();
  auto ch = bernoulli_pascal_chain<Rational>(q(1, 2), -30);
  auto ladder = intrinsic_metrics(*ch.chain, -1, LevelMetric<Rational>::discrete(ch.graph->vertices(-1)), -30);
  long pairs = 0;
  for (int n = -1; n >= -30; --n)
    for (int v = 0; v <= -n; ++v)
      for (int w = 0; w <= -n; ++w, ++pairs)
        c.check(ladder.at(n)(v, w) == q(std::abs(v - w), -n),
                "level " + std::to_string(n) + " pair (" + std::to_string(v) + "," + std::to_string(w) + ")");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(secs < 10, "runtime " + num(secs) + " s exceeds 10 s");
  return c.done(std::to_string(pairs) + " pairs equal |v-v'|/|n| down to level -30");
}

Outcome euler_metrics() {
  Checker c;
  auto t0 = std::chrono::steady_clock::now();
  const int depth = 12;
  auto ch = symmetric_euler_chain<Rational>(-depth);
  auto ladder = intrinsic_metrics(*ch.chain, -1, LevelMetric<Rational>::discrete(ch.graph->vertices(-1)), -depth);
  auto A = eulerian_table(depth + 1);
  auto paths = euler_paths_to_one(depth);
  for (int m = 1; m <= depth; ++m) {
    std::vector<Rational> phi;
    for (int v = 0; v <= m; ++v) {
      // generalized Eulerian numbers against the path-count DP
      if (v >= 1)
        c.check(generalized_eulerian_A01(m - v, v - 1) == paths[m][v],
                "A01(" + std::to_string(m - v) + "," + std::to_string(v - 1) + ") differs from path count");
      Rational f(paths[m][v], A[m + 1][v]);
      f.canonicalize();
      c.check(euler_conditional(v, -m) == f, "euler_conditional(" + std::to_string(v) + "," + std::to_string(-m) + ")");
      phi.push_back(f);
    }
    auto closed = closed_form_intrinsic(*ch.graph, -m);
    for (int v = 0; v <= m; ++v)
      for (int w = 0; w <= m; ++w) {
        const Rational expect = abs(Rational(phi[v] - phi[w]));
        c.check(ladder.at(-m)(v, w) == expect, "ladder at level " + std::to_string(-m));
        c.check(closed(v, w) == expect, "closed form at level " + std::to_string(-m));
      }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(secs < 30, "runtime " + num(secs) + " s exceeds 30 s");
  return c.done("ladder = |phi(v) - phi(v')| with phi = A01/A, depth 12, " + num(secs, 3) + " s");
}

Outcome eulerian_identities() {
  Checker c;
  const int depth = 12;
  auto A = eulerian_table(depth + 1);
  auto e = euler_graph(-depth);
  auto p = pascal_graph(-depth);
  for (int m = 1; m <= depth; ++m)
    for (int v = 0; v <= m; ++v) {
      c.check(e->dim(-m, v) == A[m + 1][v], "Euler dim at level " + std::to_string(-m));
      c.check(p->dim(-m, v) == binomial(m, v), "Pascal dim at level " + std::to_string(-m));
    }
  BigInt fact = 1;
  for (int n = 1; n <= depth; ++n) {
    fact *= n;
    BigInt s = 0;
    for (int k = 0; k < n; ++k) {
      c.check(eulerian(n, k) == A[n][k], "eulerian(" + std::to_string(n) + "," + std::to_string(k) + ")");
      s += eulerian(n, k);
    }
    c.check(s == fact, "sum of A(" + std::to_string(n) + ", k) is not n!");
  }
  return c.done("dims = A(|n|+1, v) and C(|n|, v); row sums = n!, n <= 12");
}

Outcome euler_centrality() {
  Checker c;
  const int depth = 12;
  auto ch = symmetric_euler_chain<Rational>(-depth);
  auto A = eulerian_table(depth + 1);
  long rows = 0;
  for (int n = -depth; n < 0; ++n) {
    // forward kernels obtained from the backward uniform-edge rule by Bayes
    auto bayes = bayes_kernel(*ch.graph, ch.measure, ch.marginals, n);
    const int m = -n;
    for (int v = 0; v <= m; ++v, ++rows) {
      // central kernel: multiplicity * dim(target) / dim(source)
      std::vector<Rational> expect(static_cast<std::size_t>(m), Rational(0));
      if (v <= m - 1) expect[v] += Rational(BigInt((v + 1) * A[m][v]), A[m + 1][v]);
      if (v >= 1) expect[v - 1] += Rational(BigInt((m - v + 1) * A[m][v - 1]), A[m + 1][v]);
      for (int w = 0; w < m; ++w) {
        expect[w].canonicalize();
        c.check(bayes(v, w) == expect[w], "Bayes kernel at level " + std::to_string(n));
        c.check((*ch.chain->kernel_into(n + 1))(v, w) == expect[w], "chain kernel at level " + std::to_string(n));
      }
    }
  }
  return c.done(std::to_string(rows) + " kernel rows equal mult * dim(w) / dim(v), depth 12");
}

Outcome euler_limit() {
  Checker c;
  auto t0 = std::chrono::steady_clock::now();
  auto ch = symmetric_euler_chain<double>(-200);
  auto k = compose_kernels(*ch.chain, -200, -1);
  const double p = k(100, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(std::fabs(p - 0.5) <= 0.05, "P(V_-1 = 1 | V_-200 = 100) = " + num(p));
  c.check(secs < 60, "runtime " + num(secs) + " s exceeds 60 s");
  return c.done("P(V_-1 = 1 | V_-200 = 100) = " + num(p) + ", " + num(secs, 3) + " s");
}

Outcome pascal_vprime() {
  Checker c;
  auto ch = bernoulli_pascal_chain<Rational>(q(1, 2), -100);
  auto ladder = intrinsic_metrics(*ch.chain, -1, LevelMetric<Rational>::discrete(ch.graph->vertices(-1)), -100);
  // sum over i, j of b(i) b(j) |i - j| / 100 with b = Bin(100, 1/2)
  const BigInt total = BigInt(1) << 100;
  Rational oracle = 0;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 100; ++j) oracle += Rational(BigInt(binomial(100, i) * binomial(100, j) * std::abs(i - j)), BigInt(total * total * 100));
  oracle.canonicalize();
  auto v100 = vprime_statistic(ladder, -100);
  c.check(v100 == oracle, "V' at |n| = 100 is " + v100.get_str() + ", double sum gives " + oracle.get_str());
  c.check(v100 < q(1, 10), "V' at |n| = 100 is not below 0.1");
  Rational prev = 2;
  std::string col;
  for (int n : {8, 16, 32, 64, 100}) {
    auto x = vprime_statistic(ladder, -n);
    c.check(x < prev, "not strictly decreasing at |n| = " + std::to_string(n));
    prev = x;
    col += (col.empty() ? "" : ", ") + num(x.get_d(), 4);
  }
  return c.done("V' over {8,16,32,64,100}: " + col);
}

Outcome witnesses() {
  Checker c;
  auto sq = square_walk_chain<Rational>(-64);
  auto sl = intrinsic_metrics(sq, 0, LevelMetric<Rational>::discrete(sq.space(0)), -64);
  for (int n = -1; n >= -64; --n)
    c.check(vprime_statistic(sl, n) == q(1, 2), "square walk V' at level " + std::to_string(n));
  auto p = poisson_chain([](int) { return 1.0; }, -64);
  auto rho = LevelMetric<double>::absolute(p.space(0));
  std::vector<double> s;
  for (int m : {-8, -16, -32, -64}) s.push_back(tail_criterion_statistic(p, 0, m, rho));
  for (double x : s) {
    c.check(x > 0.05, "Poisson tail statistic " + num(x) + " not above 0.05");
    c.check(std::fabs(x - s[0]) <= 1e-9, "Poisson tail statistic not constant");
  }
  return c.done("square walk V' = 1/2 on levels -1..-64; Poisson(1) tail statistic " + num(s[0]) +
                " at |m| = 8..64");
}

Outcome poisson_bounds() {
  Checker c;
  double worst_slack = 0;
  int cases = 0;
  for (double theta : {0.05, 0.1, 0.2})
    for (int k = 1; k <= 20; ++k, ++cases) {
      auto b = binomial_poisson_bound(k, theta);
      const double oracle = tv_binomial_poisson(k, theta, k);
      c.check(std::fabs(b.value - oracle) <= 1e-9,
              "TV(Bin(" + std::to_string(k) + "," + num(theta) + "), Poi) = " + num(b.value, 12) + ", oracle " + num(oracle, 12));
      c.check(b.holds && b.value <= b.bound + b.slack, "binomial bound fails at k = " + std::to_string(k));
      c.check(b.slack <= 1e-9, "truncation slack above 1e-9");
      c.check(std::fabs(b.bound - k * theta * theta) < 1e-15, "bound is not k theta^2");
      worst_slack = std::max(worst_slack, b.slack);
    }
  for (double l : {1.0, 2.0, 4.0})
    for (double lp : {0.5, 1.0, 2.0}) {
      if (l < lp) continue;
      ++cases;
      auto b = poisson_distance_bound(l, lp);
      const double oracle = tv_poisson(l, lp);
      c.check(std::fabs(b.value - oracle) <= 1e-9, "TV(Poi(" + num(l) + "), Poi(" + num(lp) + "))");
      c.check(b.holds && b.value <= b.bound + b.slack, "Poisson bound fails at " + num(l) + ", " + num(lp));
      c.check(std::fabs(b.bound - (1 - std::exp(lp - l))) < 1e-15, "bound is not 1 - exp(lambda' - lambda)");
      c.check(b.slack <= 1e-9, "truncation slack above 1e-9");
    }
  return c.done(std::to_string(cases) + " cases within their bounds, slack <= " + num(worst_slack, 3));
}

Outcome poisson_case2() {
  Checker c;
  PoissonChainInfo info;
  auto ch = poisson_chain([](int n) { return -n + 1.0; }, -400, {}, &info);
  c.check(info.tail_mass < 1e-9, "truncation tail " + num(info.tail_mass));
  auto p1 = poisson_pmf(1.0, info.truncation);
  double prev = 1;
  std::string col;
  for (int m : {50, 100, 200, 400}) {
    auto k = compose_kernels(ch, -m, 0);
    const auto& mu = ch.marginal(-m);
    double e = 0, oracle = 0;
    for (std::size_t x = 0; x < mu.size(); ++x) {
      double tv = 0, tv_o = 0, mass_o = 0;
      for (std::size_t y = 0; y < p1.size(); ++y) {
        tv += std::fabs(k(x, y) - p1[y]);
        const double b = binomial_p(static_cast<int>(x), 1.0 / (m + 1), static_cast<int>(y));
        const double pp = poisson_p(1.0, static_cast<int>(y));
        tv_o += std::fabs(b - pp);
        mass_o += pp;
      }
      e += mu[x] * tv / 2;
      oracle += poisson_p(m + 1.0, static_cast<int>(x)) * (tv_o + (1 - mass_o)) / 2;
    }
    c.check(std::fabs(e - oracle) <= 1e-8, "E[TV] at |n| = " + std::to_string(m) + " is " + num(e) + ", oracle " + num(oracle));
    c.check(e < prev, "not decreasing at |n| = " + std::to_string(m));
    if (m == 400) c.check(e <= 0.06, "E[TV] at |n| = 400 is " + num(e));
    prev = e;
    col += (col.empty() ? "" : ", ") + num(e, 4);
  }
  return c.done("E[TV] over {50,100,200,400}: " + col + "; tail " + num(info.tail_mass, 2));
}

Outcome triple_agreement() {
  Checker c;
  long pairs = 0;
  auto pc = bernoulli_pascal_chain<Rational>(q(1, 2), -10);
  auto pl = intrinsic_metrics(*pc.chain, -1, LevelMetric<Rational>::discrete(pc.graph->vertices(-1)), -10);
  for (int n = -2; n >= -10; --n) {
    auto r = vprime_equals_conditional_kantorovich(pl, n);
    c.check(r.holds(), "Pascal: " + r.detail);
    pairs += static_cast<long>(r.compared);
  }
  auto ec = symmetric_euler_chain<Rational>(-8);
  auto el = intrinsic_metrics(*ec.chain, -1, LevelMetric<Rational>::discrete(ec.graph->vertices(-1)), -8);
  for (int n = -2; n >= -8; --n) {
    auto r = vprime_equals_conditional_kantorovich(el, n);
    c.check(r.holds(), "Euler: " + r.detail);
    pairs += static_cast<long>(r.compared);
  }
  // C(k+1, 2) pairs per level: k = 2..10 for Pascal, 2..8 for Euler
  c.check(pairs == 219 + 119, "compared " + std::to_string(pairs) + " pairs");
  return c.done(std::to_string(pairs) + " pairs: ladder = composed kernel W1 = common-innovation expectation");
}

Outcome propp_wilson() {
  Checker c;
  auto ch = bernoulli_pascal_chain<Rational>(q(1, 2), -200);
  auto rho = LevelMetric<Rational>::discrete(ch.graph->vertices(-1));
  auto x = choose_start(*ch.chain, -200, -1, rho, StartPolicy::minimizing);
  const Rational exact = exact_pw_expectation(*ch.chain, -200, x, -1, rho);
  PWSampler<Rational> sampler(*ch.chain, -200, x, -1);
  auto est = pw_monte_carlo(sampler, rho, 10000, 7);
  c.check(exact < q(1, 20), "exact expectation " + num(exact.get_d()) + " not below 0.05");
  c.check(std::fabs(est.mean - exact.get_d()) <= 3 * est.std_error,
          "Monte Carlo " + num(est.mean) + " +- " + num(est.std_error) + " vs exact " + num(exact.get_d()));
  return c.done("x_-200 = " + std::to_string(x) + ", exact " + num(exact.get_d()) + ", Monte Carlo " + num(est.mean) +
                " +- " + num(est.std_error));
}

Outcome multipascal() {
  Checker c;
  auto theta = std::vector<Rational>{q(1, 3), q(1, 3), q(1, 3)};
  auto ch = multinomial_multipascal_chain<Rational>(theta, -24);
  auto dec = metric_decomposition_check<Rational>(multinomial_multipascal_chain<Rational>(theta, -10).chain,
                                                  CoordinateWeights<Rational>::uniform(3), -1, -10);
  c.check(dec.holds(), "decomposition: " + dec.detail);

  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> level(-24, -2);
  for (int t = 0; t < 100; ++t) {
    const int n = level(gen);
    const auto& sp = ch.graph->vertices(n);
    std::uniform_int_distribution<std::size_t> pick(0, sp->size() - 1);
    const auto v = pick(gen), w = pick(gen);
    auto plan = wellordered_coupling_multipascal<Rational>(*ch.graph, n, v, w);
    auto k = ch.chain->kernel_from(n);
    c.check(plan.row_margin() == k->row(v) && plan.col_margin() == k->row(w),
            "margins at level " + std::to_string(n) + " pair " + sp->label(v) + "," + sp->label(w));
    c.check(well_ordered_check(plan, sp->state(v), sp->state(w)),
            "not well ordered at level " + std::to_string(n) + " pair " + sp->label(v) + "," + sp->label(w));
  }

  auto w = CoordinateWeights<Rational>::uniform(3);
  auto ladder = intrinsic_metrics(*ch.chain, -1, LevelMetric<Rational>::weighted_l1(ch.graph->vertices(-1), w.a), -24);
  Rational prev = 2;
  std::string col;
  for (int n : {6, 12, 24}) {
    auto x = vprime_statistic(ladder, -n);
    c.check(x < prev, "V' not strictly decreasing at |n| = " + std::to_string(n));
    prev = x;
    col += (col.empty() ? "" : ", ") + num(x.get_d(), 4);
  }
  return c.done("decomposition on " + std::to_string(dec.compared) + " pairs; 100 couplings well ordered; V' " + col);
}

Outcome transport_oracle() {
  Checker c;
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(3, 5), weight(1, 9), total(5, 9);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = static_cast<std::size_t>(size(gen)), n = static_cast<std::size_t>(size(gen));
    const int N = total(gen);
    std::uniform_int_distribution<std::size_t> pr(0, m - 1), pc(0, n - 1);
    // every point carries at least one unit of mass
    std::vector<int> a(m, 1), b(n, 1);
    for (std::size_t k = m; k < static_cast<std::size_t>(N); ++k) ++a[pr(gen)];
    for (std::size_t k = n; k < static_cast<std::size_t>(N); ++k) ++b[pc(gen)];
    Matrix<Rational> cost(m, n, Rational(0));
    Matrix<double> costf(m, n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cost(i, j) = q(weight(gen), 3);
        costf(i, j) = cost(i, j).get_d();
      }
    std::vector<Rational> sa, sb;
    std::vector<double> fa, fb;
    for (int x : a) {
      sa.push_back(q(x, N));
      fa.push_back(static_cast<double>(x) / N);
    }
    for (int x : b) {
      sb.push_back(q(x, N));
      fb.push_back(static_cast<double>(x) / N);
    }
    // the transport polytope with integer margins has integer vertices, so the grid minimum is the LP value
    Rational grid = testing_support::brute_force_transport<Rational>(a, b, [&](std::size_t i, std::size_t j) {
      return cost(i, j);
    });
    grid /= N;
    auto sol = solve_transport(sa, sb, cost);
    c.check(sol.cost == grid, "instance " + std::to_string(t) + ": exact " + sol.cost.get_str() + " vs grid " + grid.get_str());
    // dual certificate: feasible potentials with the same objective
    Rational dual = 0;
    for (std::size_t i = 0; i < m; ++i) dual += sa[i] * sol.u[i];
    for (std::size_t j = 0; j < n; ++j) dual += sb[j] * sol.v[j];
    c.check(dual == sol.cost, "instance " + std::to_string(t) + ": dual objective differs");
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        c.check(sol.u[i] + sol.v[j] <= cost(i, j), "instance " + std::to_string(t) + ": dual infeasible");
    auto solf = solve_transport(fa, fb, costf);
    c.check(std::fabs(solf.cost - grid.get_d()) <= 1e-6, "instance " + std::to_string(t) + ": float " + num(solf.cost));
  }
  auto s = OrderedStateSpace::range(0, 0, 5);
  auto rho = LevelMetric<Rational>::absolute(s);
  for (int t = 0; t < 100; ++t) {
    auto l = testing_support::ordered_triple(gen, s);
    c.check(kantorovich(l[0], l[2], rho, TransportMethod::simplex) ==
                kantorovich(l[0], l[1], rho, TransportMethod::simplex) + kantorovich(l[1], l[2], rho, TransportMethod::simplex),
            "linearity fails on triple " + std::to_string(t));
  }
  return c.done("100 instances: exact = grid LP value with dual certificate, float within 1e-6; 100 ordered triples additive");
}

Outcome determinism() {
  Checker c;
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "pw", "--chain", "pascal", "--p", "0.5", "--n", "-1", "--ms", "25,50,100,200", "--trials", "10000",
       "--seed", "7", "--format", "json"},
      {"simulate", "cascade", "--chain", "multipascal", "--d", "3", "--theta", "1/3,1/3,1/3", "--seed", "7", "--format",
       "json"},
      {"simulate", "pw", "--chain", "poisson", "--rule", "lambda=|n|+1", "--ms", "10,20", "--trials", "2000", "--seed",
       "11", "--format", "csv"},
  };
  const char* saved = std::getenv("FILTRA_THREADS");
  const std::string saved_value = saved ? saved : "";
  for (const auto& args : commands) {
    std::vector<std::string> outputs;
    // default threads, again, then a single thread
    for (int run = 0; run < 3; ++run) {
      if (run == 2) setenv("FILTRA_THREADS", "1", 1);
      std::ostringstream out, err;
      int code = run_cli(args, out, err);
      c.check(code == 0, args[1] + " exited with " + std::to_string(code) + ": " + err.str());
      outputs.push_back(out.str());
    }
    if (saved) {
      setenv("FILTRA_THREADS", saved_value.c_str(), 1);
    } else {
      unsetenv("FILTRA_THREADS");
    }
    c.check(outputs[0] == outputs[1], args[1] + " " + args[3] + ": reruns differ");
    c.check(outputs[0] == outputs[2], args[1] + " " + args[3] + ": single-thread run differs");
  }
  return c.done("pw and cascade outputs byte-identical across reruns and thread counts");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Pascal intrinsic metrics", pascal_metrics},
      {"Euler intrinsic metrics", euler_metrics},
      {"Eulerian identities", eulerian_identities},
      {"centrality of symmetric Euler kernels", euler_centrality},
      {"Euler conditional limit 1/2", euler_limit},
      {"V' decay for Pascal p = 1/2", pascal_vprime},
      {"non-standardness witnesses", witnesses},
      {"Poisson bounds", poisson_bounds},
      {"Poisson growing-mean convergence", poisson_case2},
      {"triple agreement of intrinsic metrics", triple_agreement},
      {"Propp-Wilson decay", propp_wilson},
      {"multipascal d = 3", multipascal},
      {"transport solver oracle", transport_oracle},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << "AC" << std::setw(2) << std::setfill('0') << i + 1 << std::setfill(' ') << ' '
              << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": " << o.detail << " [" << std::fixed
              << std::setprecision(1) << secs << " s]" << std::defaultfloat << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed;
}
