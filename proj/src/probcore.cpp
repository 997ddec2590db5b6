#include "filtra/probcore.hpp"

#include <sstream>

namespace filtra {

OrderedStateSpace::OrderedStateSpace(int level, std::vector<Coord> states, OrderKind order)
    : level_(level), states_(std::move(states)), order_(order), dimension_(0) {
  if (states_.empty()) throw Error("state space must not be empty");
  dimension_ = states_.front().size();
  if (dimension_ == 0) throw Error("state coordinates must have dimension >= 1");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].size() != dimension_) throw Error("state coordinates have mixed dimensions");
    if (!index_.emplace(states_[i], i).second) throw Error("duplicate state " + label(i));
  }
  if (order_ == OrderKind::total) {
    if (dimension_ != 1) throw Error("totally ordered spaces carry one coordinate per state");
    for (std::size_t i = 1; i < states_.size(); ++i)
      if (states_[i - 1][0] >= states_[i][0]) throw Error("totally ordered states must be strictly increasing");
  }
}

std::shared_ptr<const OrderedStateSpace> OrderedStateSpace::total(int level, std::vector<int> values) {
  std::vector<Coord> states;
  states.reserve(values.size());
  for (int v : values) states.push_back(Coord{v});
  return std::shared_ptr<const OrderedStateSpace>(new OrderedStateSpace(level, std::move(states), OrderKind::total));
}

std::shared_ptr<const OrderedStateSpace> OrderedStateSpace::range(int level, int lo, int hi) {
  if (hi < lo) throw Error("empty range state space");
  std::vector<int> values;
  for (int v = lo; v <= hi; ++v) values.push_back(v);
  return total(level, std::move(values));
}

std::shared_ptr<const OrderedStateSpace> OrderedStateSpace::coordinates(int level, std::vector<Coord> states) {
  return std::shared_ptr<const OrderedStateSpace>(
      new OrderedStateSpace(level, std::move(states), OrderKind::coordinate));
}

std::optional<std::size_t> OrderedStateSpace::index_of(const Coord& c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool OrderedStateSpace::leq(std::size_t i, std::size_t j) const {
  if (order_ == OrderKind::total) return i <= j;
  for (std::size_t k = 0; k < dimension_; ++k)
    if (states_[i][k] > states_[j][k]) return false;
  return true;
}

bool OrderedStateSpace::same_as(const OrderedStateSpace& other) const {
  return level_ == other.level_ && order_ == other.order_ && states_ == other.states_;
}

std::string OrderedStateSpace::label(std::size_t i) const {
  const auto& s = states_.at(i);
  if (s.size() == 1) return std::to_string(s[0]);
  std::ostringstream os;
  os << '(';
  for (std::size_t k = 0; k < s.size(); ++k) os << (k ? "," : "") << s[k];
  os << ')';
  return os.str();
}

bool state_leq(const OrderedStateSpace& a, std::size_t i, const OrderedStateSpace& b, std::size_t j) {
  if (a.totally_ordered() && b.totally_ordered()) return a.value(i) <= b.value(j);
  if (a.dimension() != b.dimension()) throw SpaceMismatch("state_leq: dimensions differ");
  const auto& x = a.state(i);
  const auto& y = b.state(j);
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] > y[k]) return false;
  return true;
}

}  // namespace filtra
