#ifndef FILTRA_PROBCORE_HPP
#define FILTRA_PROBCORE_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "filtra/matrix.hpp"
#include "filtra/numeric.hpp"

namespace filtra {

using Coord = std::vector<int>;

enum class OrderKind {
  total,       // one integer per state, strictly increasing
  coordinate,  // product partial order on integer vectors
};

// The state space of one level. States are identified by their index; each
// state carries an integer coordinate vector (dimension 1 for total orders).
class OrderedStateSpace {
 public:
  /// Totally ordered space; values must be strictly increasing.
  static std::shared_ptr<const OrderedStateSpace> total(int level, std::vector<int> values);
  /// {lo, lo+1, ..., hi}.
  static std::shared_ptr<const OrderedStateSpace> range(int level, int lo, int hi);
  /// Product-ordered space of coordinate vectors sharing one dimension.
  static std::shared_ptr<const OrderedStateSpace> coordinates(int level, std::vector<Coord> states);

  int level() const { return level_; }
  std::size_t size() const { return states_.size(); }
  std::size_t dimension() const { return dimension_; }
  OrderKind order() const { return order_; }
  bool totally_ordered() const { return order_ == OrderKind::total; }

  const Coord& state(std::size_t i) const { return states_[i]; }
  const std::vector<Coord>& states() const { return states_; }
  /// Scalar value of a state of a totally ordered space.
  int value(std::size_t i) const { return states_[i][0]; }
  std::optional<std::size_t> index_of(const Coord& c) const;

  /// Order relation: index order for total spaces, componentwise otherwise.
  bool leq(std::size_t i, std::size_t j) const;
  bool same_as(const OrderedStateSpace& other) const;
  std::string label(std::size_t i) const;

 private:
  OrderedStateSpace(int level, std::vector<Coord> states, OrderKind order);

  int level_;
  std::vector<Coord> states_;
  OrderKind order_;
  std::size_t dimension_;
  std::map<Coord, std::size_t> index_;
};

using SpacePtr = std::shared_ptr<const OrderedStateSpace>;

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
  return a == b || (a && b && a->same_as(*b));
}

inline void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (!same_space(a, b)) throw SpaceMismatch(std::string(what) + ": state spaces differ");
}

/// x <= y across two totally ordered spaces (by value) or within one product space.
bool state_leq(const OrderedStateSpace& a, std::size_t i, const OrderedStateSpace& b, std::size_t j);

template <Numeric T>
class Dist {
 public:
  /// Validates: nonnegative weights summing to one (exactly, or within kFloatTol).
  Dist(SpacePtr space, std::vector<T> weights) : space_(std::move(space)), weights_(std::move(weights)) {
    if (!space_) throw Error("Dist: null state space");
    if (weights_.size() != space_->size()) throw Error("Dist: weight count does not match state count");
    T total = Num<T>::zero();
    for (const auto& w : weights_) {
      if (Num<T>::negative(w, 0.0)) throw Error("Dist: negative weight");
      total += w;
    }
    if (!Num<T>::eq(total, Num<T>::one(), kFloatTol))
      throw Error("Dist: weights do not sum to one (sum = " + Num<T>::to_string(total) + ")");
  }

  static Dist point_mass(SpacePtr space, std::size_t i) {
    std::vector<T> w(space->size(), Num<T>::zero());
    w.at(i) = Num<T>::one();
    return Dist(std::move(space), std::move(w));
  }

  static Dist uniform(SpacePtr space) {
    std::vector<T> w(space->size(), Num<T>::ratio(1, static_cast<long>(space->size())));
    return Dist(std::move(space), std::move(w));
  }

  const SpacePtr& space() const { return space_; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<T>& weights() const { return weights_; }
  const T& operator[](std::size_t i) const { return weights_[i]; }

  bool operator==(const Dist& o) const { return same_space(space_, o.space_) && weights_ == o.weights_; }

 private:
  SpacePtr space_;
  std::vector<T> weights_;
};

template <Numeric T>
Dist<T> make_dist(SpacePtr space, std::vector<T> weights) {
  if (!space) throw Error("make_dist: null state space");
  if (weights.size() != space->size()) throw Error("make_dist: weight count does not match state count");
  T total = Num<T>::zero();
  for (const auto& w : weights) {
    if (Num<T>::negative(w, 0.0)) throw Error("make_dist: negative weight");
    total += w;
  }
  if (!Num<T>::positive(total, 0.0)) throw Error("make_dist: zero total mass");
  for (auto& w : weights) w /= total;
  if constexpr (!Num<T>::exact) {
    // absorb rounding so the sum is within tolerance even for long vectors
    double s = 0.0;
    for (double w : weights) s += w;
    for (auto& w : weights) w /= s;
  }
  return Dist<T>(std::move(space), std::move(weights));
}

template <Numeric T>
std::vector<T> cdf(const Dist<T>& d) {
  if (!d.space()->totally_ordered()) throw Error("cdf: state space is not totally ordered");
  std::vector<T> out;
  out.reserve(d.size());
  T acc = Num<T>::zero();
  for (const auto& w : d.weights()) {
    acc += w;
    out.push_back(acc);
  }
  if constexpr (Num<T>::exact) {
    // sums to exactly one already
  } else {
    if (!out.empty()) out.back() = 1.0;
  }
  return out;
}

/// True iff mu <=st nu, i.e. cdf(nu) <= cdf(mu) pointwise.
template <Numeric T>
bool stochastically_dominates(const Dist<T>& nu, const Dist<T>& mu, double tol = kFloatTol) {
  require_same_space(nu.space(), mu.space(), "stochastically_dominates");
  auto fn = cdf(nu);
  auto fm = cdf(mu);
  for (std::size_t i = 0; i < fn.size(); ++i)
    if (!Num<T>::le(fn[i], fm[i], tol)) return false;
  return true;
}

enum class PlanOrder { none, row_le_col, row_ge_col, both };

inline bool plan_order_le(PlanOrder o) { return o == PlanOrder::row_le_col || o == PlanOrder::both; }
inline bool plan_order_ge(PlanOrder o) { return o == PlanOrder::row_ge_col || o == PlanOrder::both; }

template <Numeric T>
class CouplingPlan {
 public:
  CouplingPlan(SpacePtr rows, SpacePtr cols, Matrix<T> joint)
      : rows_(std::move(rows)), cols_(std::move(cols)), joint_(std::move(joint)) {
    if (joint_.rows() != rows_->size() || joint_.cols() != cols_->size())
      throw Error("CouplingPlan: matrix shape does not match spaces");
    T total = Num<T>::zero();
    for (const auto& v : joint_.data()) {
      if (Num<T>::negative(v, 0.0)) throw Error("CouplingPlan: negative entry");
      total += v;
    }
    if (!Num<T>::eq(total, Num<T>::one(), 1e-10)) throw Error("CouplingPlan: mass is not one");
    order_ = detect_order();
  }

  static CouplingPlan product(const Dist<T>& mu, const Dist<T>& nu) {
    Matrix<T> j(mu.size(), nu.size(), Num<T>::zero());
    for (std::size_t a = 0; a < mu.size(); ++a)
      for (std::size_t b = 0; b < nu.size(); ++b) j(a, b) = mu[a] * nu[b];
    return CouplingPlan(mu.space(), nu.space(), std::move(j));
  }

  const SpacePtr& row_space() const { return rows_; }
  const SpacePtr& col_space() const { return cols_; }
  const Matrix<T>& joint() const { return joint_; }
  const T& operator()(std::size_t i, std::size_t j) const { return joint_(i, j); }

  Dist<T> row_margin() const {
    std::vector<T> w(joint_.rows(), Num<T>::zero());
    for (std::size_t i = 0; i < joint_.rows(); ++i)
      for (std::size_t j = 0; j < joint_.cols(); ++j) w[i] += joint_(i, j);
    return Dist<T>(rows_, std::move(w));
  }

  Dist<T> col_margin() const {
    std::vector<T> w(joint_.cols(), Num<T>::zero());
    for (std::size_t i = 0; i < joint_.rows(); ++i)
      for (std::size_t j = 0; j < joint_.cols(); ++j) w[j] += joint_(i, j);
    return Dist<T>(cols_, std::move(w));
  }

  PlanOrder order() const { return order_; }
  bool ordered() const { return order_ != PlanOrder::none; }

  /// Sum of plan(x,y) * cost(x,y).
  template <class Cost>
  T expected(Cost&& cost) const {
    T acc = Num<T>::zero();
    for (std::size_t i = 0; i < joint_.rows(); ++i)
      for (std::size_t j = 0; j < joint_.cols(); ++j)
        if (!Num<T>::is_zero(joint_(i, j), 0.0)) acc += joint_(i, j) * cost(i, j);
    return acc;
  }

 private:
  PlanOrder detect_order() const {
    bool le = true, ge = true;
    for (std::size_t i = 0; i < joint_.rows() && (le || ge); ++i)
      for (std::size_t j = 0; j < joint_.cols(); ++j) {
        if (Num<T>::is_zero(joint_(i, j), 0.0)) continue;
        if (!state_leq(*rows_, i, *cols_, j)) le = false;
        if (!state_leq(*cols_, j, *rows_, i)) ge = false;
      }
    if (le && ge) return PlanOrder::both;
    if (le) return PlanOrder::row_le_col;
    if (ge) return PlanOrder::row_ge_col;
    return PlanOrder::none;
  }

  SpacePtr rows_;
  SpacePtr cols_;
  Matrix<T> joint_;
  PlanOrder order_ = PlanOrder::none;
};

/// Comonotone plan: mass of the overlap of the two CDF step intervals.
template <Numeric T>
CouplingPlan<T> quantile_coupling(const Dist<T>& mu, const Dist<T>& nu) {
  if (!mu.space()->totally_ordered() || !nu.space()->totally_ordered())
    throw Error("quantile_coupling: spaces must be totally ordered");
  auto fm = cdf(mu);
  auto fn = cdf(nu);
  Matrix<T> joint(mu.size(), nu.size(), Num<T>::zero());
  std::size_t i = 0, j = 0;
  T prev = Num<T>::zero();
  while (i < fm.size() && j < fn.size()) {
    const T& hi = fm[i] < fn[j] ? fm[i] : fn[j];
    T len = hi - prev;
    if (Num<T>::positive(len, 0.0)) joint(i, j) += len;
    prev = hi;
    bool adv_i = fm[i] == hi;
    bool adv_j = fn[j] == hi;
    if (adv_i) ++i;
    if (adv_j) ++j;
  }
  return CouplingPlan<T>(mu.space(), nu.space(), std::move(joint));
}

/// Joint law on A x B x C, stored a-major.
template <Numeric T>
class ThreeWayJoint {
 public:
  ThreeWayJoint(SpacePtr a, SpacePtr b, SpacePtr c)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)),
        data_(a_->size() * b_->size() * c_->size(), Num<T>::zero()) {}

  T& at(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * b_->size() + b) * c_->size() + c]; }
  const T& at(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * b_->size() + b) * c_->size() + c];
  }

  const SpacePtr& space_a() const { return a_; }
  const SpacePtr& space_b() const { return b_; }
  const SpacePtr& space_c() const { return c_; }

  CouplingPlan<T> margin_ab() const { return margin(0); }
  CouplingPlan<T> margin_bc() const { return margin(1); }
  CouplingPlan<T> margin_ac() const { return margin(2); }

 private:
  CouplingPlan<T> margin(int which) const {
    const auto& r = which == 1 ? b_ : a_;
    const auto& c = which == 0 ? b_ : c_;
    Matrix<T> m(r->size(), c->size(), Num<T>::zero());
    for (std::size_t a = 0; a < a_->size(); ++a)
      for (std::size_t b = 0; b < b_->size(); ++b)
        for (std::size_t cc = 0; cc < c_->size(); ++cc) {
          const T& v = at(a, b, cc);
          if (Num<T>::is_zero(v, 0.0)) continue;
          if (which == 0) m(a, b) += v;
          else if (which == 1) m(b, cc) += v;
          else m(a, cc) += v;
        }
    return CouplingPlan<T>(r, c, std::move(m));
  }

  SpacePtr a_, b_, c_;
  std::vector<T> data_;
};

/// Relatively independent coupling over the shared middle margin.
template <Numeric T>
ThreeWayJoint<T> glue_couplings(const CouplingPlan<T>& ab, const CouplingPlan<T>& bc) {
  require_same_space(ab.col_space(), bc.row_space(), "glue_couplings");
  auto nu = ab.col_margin();
  auto nu2 = bc.row_margin();
  for (std::size_t b = 0; b < nu.size(); ++b)
    if (!Num<T>::eq(nu[b], nu2[b], 1e-10)) throw Error("glue_couplings: middle margins differ");
  ThreeWayJoint<T> out(ab.row_space(), ab.col_space(), bc.col_space());
  const std::size_t na = ab.row_space()->size(), nb = nu.size(), nc = bc.col_space()->size();
  for (std::size_t b = 0; b < nb; ++b) {
    if (Num<T>::is_zero(nu[b], 0.0)) continue;
    for (std::size_t a = 0; a < na; ++a) {
      if (Num<T>::is_zero(ab(a, b), 0.0)) continue;
      for (std::size_t c = 0; c < nc; ++c) {
        if (Num<T>::is_zero(bc(b, c), 0.0)) continue;
        out.at(a, b, c) = ab(a, b) * bc(b, c) / nu[b];
      }
    }
  }
  return out;
}

template <Numeric T>
T total_variation(const Dist<T>& mu, const Dist<T>& nu) {
  require_same_space(mu.space(), nu.space(), "total_variation");
  T acc = Num<T>::zero();
  for (std::size_t i = 0; i < mu.size(); ++i) acc += Num<T>::abs(T(mu[i] - nu[i]));
  return acc / 2;
}

}  // namespace filtra

#endif  // FILTRA_PROBCORE_HPP
