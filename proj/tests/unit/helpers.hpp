#ifndef FILTRA_TEST_HELPERS_HPP
#define FILTRA_TEST_HELPERS_HPP

#include <algorithm>
#include <random>
#include <vector>

#include "filtra/kernel.hpp"

namespace testing_support {

using filtra::Dist;
using filtra::Rational;
using filtra::SpacePtr;

inline Rational q(long p, long r = 1) { return filtra::Num<Rational>::ratio(p, r); }

/// Random law with integer weights 0..9 (at least one positive), normalized exactly.
inline Dist<Rational> random_dist(std::mt19937_64& gen, const SpacePtr& space, int max_weight = 9) {
  std::uniform_int_distribution<int> w(0, max_weight);
  std::vector<Rational> ws(space->size());
  bool any = false;
  for (auto& x : ws) {
    x = w(gen);
    any = any || x > 0;
  }
  if (!any) ws[0] = 1;
  return filtra::make_dist<Rational>(space, ws);
}

inline Dist<double> to_float(const Dist<Rational>& d) {
  std::vector<double> w;
  for (const auto& x : d.weights()) w.push_back(x.get_d());
  return filtra::make_dist<double>(d.space(), w);
}

inline filtra::SparseRow<Rational> sparse_row(std::mt19937_64& gen, std::size_t n) {
  auto s = filtra::OrderedStateSpace::range(0, 0, static_cast<int>(n) - 1);
  return filtra::sparse_of(random_dist(gen, s, 3));
}

/// Three laws with a <=st b <=st c: pointwise max, median and min of three random CDFs.
inline std::vector<Dist<Rational>> ordered_triple(std::mt19937_64& gen, const SpacePtr& space, int max_weight = 9) {
  std::vector<std::vector<Rational>> f;
  for (int k = 0; k < 3; ++k) f.push_back(filtra::cdf(random_dist(gen, space, max_weight)));
  std::vector<Dist<Rational>> out;
  for (int rank = 2; rank >= 0; --rank) {
    std::vector<Rational> w;
    Rational prev = 0;
    for (std::size_t i = 0; i < space->size(); ++i) {
      std::vector<Rational> c{f[0][i], f[1][i], f[2][i]};
      std::sort(c.begin(), c.end());
      w.push_back(c[rank] - prev);
      prev = c[rank];
    }
    out.emplace_back(space, w);
  }
  return out;
}

/// Exhaustive minimum over integer transport tables with margins a and b
/// (the transport polytope is integral, so this is the exact optimum scaled by sum(a)).
template <class T, class Cost>
T brute_force_transport(const std::vector<int>& a, const std::vector<int>& b, Cost&& cost) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<int> row = a, col = b;
  std::vector<int> table(m * n, 0);
  T best{};
  bool have = false;
  auto rec = [&](auto&& self, std::size_t cell) -> void {
    if (cell == m * n) {
      T acc{};
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (table[i * n + j]) acc += T(table[i * n + j]) * cost(i, j);
      if (!have || acc < best) {
        best = acc;
        have = true;
      }
      return;
    }
    std::size_t i = cell / n, j = cell % n;
    if (j == n - 1) {
      int x = row[i];
      if (x > col[j]) return;
      table[cell] = x;
      row[i] -= x;
      col[j] -= x;
      self(self, cell + 1);
      row[i] += x;
      col[j] += x;
      table[cell] = 0;
      return;
    }
    int hi = std::min(row[i], col[j]);
    for (int x = 0; x <= hi; ++x) {
      table[cell] = x;
      row[i] -= x;
      col[j] -= x;
      self(self, cell + 1);
      row[i] += x;
      col[j] += x;
    }
    table[cell] = 0;
  };
  rec(rec, 0);
  return best;
}

}  // namespace testing_support

#endif
