#ifndef FILTRA_KERNEL_HPP
#define FILTRA_KERNEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "filtra/probcore.hpp"

namespace filtra {

template <Numeric T>
struct Entry {
  std::size_t index;
  T weight;

  bool operator==(const Entry&) const = default;
};

template <Numeric T>
using SparseRow = std::vector<Entry<T>>;

/// Keeps positive entries, sorted by index, duplicates merged.
template <Numeric T>
SparseRow<T> normalize_row(SparseRow<T> row) {
  std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  SparseRow<T> out;
  out.reserve(row.size());
  for (auto& e : row) {
    if (!out.empty() && out.back().index == e.index) {
      out.back().weight += e.weight;
    } else {
      out.push_back(std::move(e));
    }
  }
  std::erase_if(out, [](const Entry<T>& e) { return Num<T>::is_zero(e.weight, 0.0); });
  return out;
}

template <Numeric T>
SparseRow<T> sparse_of(const Dist<T>& d) {
  SparseRow<T> out;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (Num<T>::positive(d[i], 0.0)) out.push_back({i, d[i]});
  return out;
}

template <Numeric T>
Dist<T> dense_of(const SpacePtr& space, std::span<const Entry<T>> row) {
  std::vector<T> w(space->size(), Num<T>::zero());
  for (const auto& e : row) w.at(e.index) = e.weight;
  return Dist<T>(space, std::move(w));
}

// Row-stochastic transition matrix from one level's states to the next,
// stored in compressed sparse rows.
template <Numeric T>
class LevelKernel {
 public:
  LevelKernel(SpacePtr source, SpacePtr target, std::vector<SparseRow<T>> rows)
      : source_(std::move(source)), target_(std::move(target)) {
    if (rows.size() != source_->size()) throw Error("LevelKernel: one row per source state required");
    offsets_.reserve(rows.size() + 1);
    offsets_.push_back(0);
    for (auto& r : rows) {
      for (const auto& e : r)
        if (Num<T>::negative(e.weight, 0.0)) throw Error("LevelKernel: negative transition probability");
      auto row = normalize_row(std::move(r));
      T total = Num<T>::zero();
      for (const auto& e : row) {
        if (e.index >= target_->size()) throw Error("LevelKernel: target index out of range");
        total += e.weight;
      }
      if (!Num<T>::eq(total, Num<T>::one(), kFloatTol))
        throw Error("LevelKernel: row does not sum to one (sum = " + Num<T>::to_string(total) + ")");
      entries_.insert(entries_.end(), std::make_move_iterator(row.begin()), std::make_move_iterator(row.end()));
      offsets_.push_back(entries_.size());
    }
  }

  static LevelKernel from_dense(SpacePtr source, SpacePtr target, const Matrix<T>& m) {
    std::vector<SparseRow<T>> rows(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (Num<T>::positive(m(i, j), 0.0)) rows[i].push_back({j, m(i, j)});
    return LevelKernel(std::move(source), std::move(target), std::move(rows));
  }

  const SpacePtr& source() const { return source_; }
  const SpacePtr& target() const { return target_; }
  std::size_t sources() const { return source_->size(); }
  std::size_t targets() const { return target_->size(); }
  std::size_t nonzeros() const { return entries_.size(); }

  std::span<const Entry<T>> row_entries(std::size_t x) const {
    return {entries_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
  }

  Dist<T> row(std::size_t x) const { return dense_of<T>(target_, row_entries(x)); }

  T operator()(std::size_t x, std::size_t w) const {
    auto r = row_entries(x);
    auto it = std::lower_bound(r.begin(), r.end(), w, [](const Entry<T>& e, std::size_t i) { return e.index < i; });
    if (it != r.end() && it->index == w) return it->weight;
    return Num<T>::zero();
  }

  bool same_row(std::size_t x, std::size_t y, double tol = kFloatTol) const {
    auto a = row_entries(x);
    auto b = row_entries(y);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].index != b[i].index || !Num<T>::eq(a[i].weight, b[i].weight, tol)) return false;
    return true;
  }

  bool operator==(const LevelKernel& o) const {
    return same_space(source_, o.source_) && same_space(target_, o.target_) && offsets_ == o.offsets_ &&
           entries_ == o.entries_;
  }

 private:
  SpacePtr source_;
  SpacePtr target_;
  std::vector<std::size_t> offsets_;
  std::vector<Entry<T>> entries_;
};

/// cdf(b) <= cdf(a) pointwise, for two sparse rows over one totally ordered space.
template <Numeric T>
bool sparse_dominates(std::span<const Entry<T>> b, std::span<const Entry<T>> a, double tol = kFloatTol) {
  T fa = Num<T>::zero(), fb = Num<T>::zero();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    std::size_t idx = std::min(i < a.size() ? a[i].index : SIZE_MAX, j < b.size() ? b[j].index : SIZE_MAX);
    if (i < a.size() && a[i].index == idx) fa += a[i++].weight;
    if (j < b.size() && b[j].index == idx) fb += b[j++].weight;
    if (!Num<T>::le(fb, fa, tol)) return false;
  }
  return true;
}

/// Rows increase in the stochastic order along the (total) source order.
template <Numeric T>
bool kernel_monotone(const LevelKernel<T>& k, double tol = kFloatTol) {
  if (!k.source()->totally_ordered() || !k.target()->totally_ordered())
    throw Error("monotonicity check needs totally ordered spaces");
  for (std::size_t x = 0; x + 1 < k.sources(); ++x)
    if (!sparse_dominates<T>(k.row_entries(x + 1), k.row_entries(x), tol)) return false;
  return true;
}

/// x -> K(x, .) is one-to-one.
template <Numeric T>
bool rows_distinct(const LevelKernel<T>& k, double tol = kFloatTol) {
  for (std::size_t x = 0; x < k.sources(); ++x)
    for (std::size_t y = x + 1; y < k.sources(); ++y)
      if (k.same_row(x, y, tol)) return false;
  return true;
}

/// Pushforward of a law through a kernel.
template <Numeric T>
Dist<T> push_forward(const Dist<T>& mu, const LevelKernel<T>& k) {
  require_same_space(mu.space(), k.source(), "push_forward");
  std::vector<T> w(k.targets(), Num<T>::zero());
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (Num<T>::is_zero(mu[x], 0.0)) continue;
    for (const auto& e : k.row_entries(x)) w[e.index] += mu[x] * e.weight;
  }
  if constexpr (Num<T>::exact) {
    return Dist<T>(k.target(), std::move(w));
  } else {
    return make_dist<T>(k.target(), std::move(w));
  }
}

/// Product kernel a then b.
template <Numeric T>
LevelKernel<T> compose(const LevelKernel<T>& a, const LevelKernel<T>& b) {
  require_same_space(a.target(), b.source(), "compose");
  std::vector<SparseRow<T>> rows(a.sources());
  std::vector<T> acc(b.targets(), Num<T>::zero());
  std::vector<char> touched(b.targets(), 0);
  std::vector<std::size_t> used;
  for (std::size_t x = 0; x < a.sources(); ++x) {
    used.clear();
    for (const auto& e1 : a.row_entries(x))
      for (const auto& e2 : b.row_entries(e1.index)) {
        if (!touched[e2.index]) {
          touched[e2.index] = 1;
          used.push_back(e2.index);
          acc[e2.index] = e1.weight * e2.weight;
        } else {
          acc[e2.index] += e1.weight * e2.weight;
        }
      }
    std::sort(used.begin(), used.end());
    T total = Num<T>::zero();
    for (auto w : used) {
      rows[x].push_back({w, acc[w]});
      total += acc[w];
      touched[w] = 0;
    }
    if constexpr (!Num<T>::exact) {
      for (auto& e : rows[x]) e.weight /= total;
    }
  }
  return LevelKernel<T>(a.source(), b.target(), std::move(rows));
}

}  // namespace filtra

#endif  // FILTRA_KERNEL_HPP
