#ifndef FILTRA_IO_HPP
#define FILTRA_IO_HPP

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "filtra/bratteli.hpp"
#include "filtra/chain.hpp"
#include "filtra/standardness.hpp"
#include "json.hpp"

namespace filtra {

inline constexpr int kChainSchemaVersion = 1;
inline constexpr int kGraphSchemaVersion = 1;

/// Writes through a temporary file in the same directory, then renames over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// Exact values as "p/q" (or "p"), floats as shortest round-trip decimals.
template <Numeric T>
nlohmann::json value_json(const T& v) {
  if constexpr (Num<T>::exact) {
    return Num<T>::to_string(v);
  } else {
    return v;
  }
}

template <Numeric T>
T value_from_json(const nlohmann::json& j) {
  if constexpr (Num<T>::exact) {
    if (!j.is_string()) throw Error("exact values are stored as \"p/q\" strings");
    return parse_rational(j.get<std::string>());
  } else {
    if (j.is_string()) return parse_rational(j.get<std::string>()).get_d();
    return j.get<double>();
  }
}

nlohmann::json space_json(const OrderedStateSpace& s);
SpacePtr space_from_json(const nlohmann::json& j);

template <Numeric T>
nlohmann::json chain_to_json(const LeveledChain<T>& c) {
  nlohmann::json j;
  j["schema"] = "filtra.chain";
  j["schema_version"] = kChainSchemaVersion;
  j["name"] = c.name();
  j["mode"] = Num<T>::exact ? "exact" : "float";
  j["depth"] = c.depth();
  j["levels"] = nlohmann::json::array();
  for (int n = c.depth(); n <= 0; ++n) j["levels"].push_back(space_json(*c.space(n)));
  j["seed"] = nlohmann::json::array();
  for (const auto& w : c.marginal(c.depth()).weights()) j["seed"].push_back(value_json(w));
  j["kernels"] = nlohmann::json::array();
  for (int n = c.depth() + 1; n <= 0; ++n) {
    auto k = c.kernel_into(n);
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t x = 0; x < k->sources(); ++x) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& e : k->row_entries(x)) row.push_back({e.index, value_json(e.weight)});
      rows.push_back(std::move(row));
    }
    j["kernels"].push_back({{"into", n}, {"rows", std::move(rows)}});
  }
  return j;
}

/// Rule replaying a serialized chain; its window is the stored depth.
template <Numeric T>
ChainRule<T> chain_rule_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "filtra.chain") throw Error("not a chain document");
  if (j.value("schema_version", 0) != kChainSchemaVersion) throw Error("unsupported chain schema version");
  const int depth = j.at("depth").get<int>();
  auto spaces = std::make_shared<std::vector<SpacePtr>>();
  for (const auto& l : j.at("levels")) spaces->push_back(space_from_json(l));
  if (spaces->size() != static_cast<std::size_t>(-depth) + 1) throw Error("chain document: one level per step required");
  for (int n = depth; n <= 0; ++n)
    if ((*spaces)[static_cast<std::size_t>(n - depth)]->level() != n) throw Error("chain document: levels out of order");
  auto kernels = std::make_shared<std::vector<LevelKernel<T>>>();
  for (const auto& kj : j.at("kernels")) {
    const int n = kj.at("into").get<int>();
    if (n <= depth || n > 0 || n != depth + 1 + static_cast<int>(kernels->size()))
      throw Error("chain document: kernels out of order");
    std::vector<SparseRow<T>> rows;
    for (const auto& rj : kj.at("rows")) {
      SparseRow<T> row;
      for (const auto& ej : rj) row.push_back({ej.at(0).get<std::size_t>(), value_from_json<T>(ej.at(1))});
      rows.push_back(std::move(row));
    }
    kernels->emplace_back((*spaces)[static_cast<std::size_t>(n - 1 - depth)],
                          (*spaces)[static_cast<std::size_t>(n - depth)], std::move(rows));
  }
  if (kernels->size() != static_cast<std::size_t>(-depth)) throw Error("chain document: missing kernels");
  std::vector<T> seed;
  for (const auto& w : j.at("seed")) seed.push_back(value_from_json<T>(w));
  auto seed_dist = std::make_shared<Dist<T>>(spaces->front(), std::move(seed));
  ChainRule<T> r;
  r.name = j.value("name", "chain");
  r.space = [spaces, depth](int n) {
    if (n < depth || n > 0) throw Error("level outside the stored chain");
    return (*spaces)[static_cast<std::size_t>(n - depth)];
  };
  r.kernel_into = [kernels, depth](int n) {
    if (n <= depth || n > 0) throw Error("level outside the stored chain");
    return (*kernels)[static_cast<std::size_t>(n - depth - 1)];
  };
  r.seed = [seed_dist, depth](int n) {
    if (n != depth) throw Error("stored chains start at their own depth");
    return *seed_dist;
  };
  return r;
}

nlohmann::json graph_to_json(const BratteliGraph& g);
GraphPtr graph_from_json(const nlohmann::json& j);

/// Rows "level,v,v',value" for v < v' on every ladder level; labels with commas are quoted.
template <Numeric T>
std::string metric_csv(const MetricLadder<T>& ladder) {
  auto quote = [](const std::string& s) { return s.find(',') == std::string::npos ? s : "\"" + s + "\""; };
  std::ostringstream os;
  os << "level,v,v',value\n";
  for (int n = ladder.top(); n >= ladder.bottom(); --n) {
    const auto& rho = ladder.at(n);
    const auto& s = rho.space();
    for (std::size_t x = 0; x < s->size(); ++x)
      for (std::size_t y = x + 1; y < s->size(); ++y)
        os << n << ',' << quote(s->label(x)) << ',' << quote(s->label(y)) << ',' << Num<T>::to_string(rho(x, y))
           << '\n';
  }
  return os.str();
}

template <Numeric T>
nlohmann::json metric_json(const MetricLadder<T>& ladder) {
  nlohmann::json j;
  j["schema"] = "filtra.metrics";
  j["schema_version"] = 1;
  j["chain"] = ladder.chain().name();
  j["mode"] = Num<T>::exact ? "exact" : "float";
  j["levels"] = nlohmann::json::array();
  for (int n = ladder.top(); n >= ladder.bottom(); --n) {
    const auto& rho = ladder.at(n);
    const auto& s = rho.space();
    nlohmann::json lv;
    lv["level"] = n;
    lv["kind"] = rho.kind() == MetricKind::metric ? "metric" : "pseudometric";
    lv["linear"] = rho.linear();
    lv["states"] = nlohmann::json::array();
    for (std::size_t x = 0; x < s->size(); ++x) lv["states"].push_back(s->state(x));
    lv["distances"] = nlohmann::json::array();
    for (std::size_t x = 0; x < s->size(); ++x) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t y = 0; y < s->size(); ++y) row.push_back(value_json(rho(x, y)));
      lv["distances"].push_back(std::move(row));
    }
    j["levels"].push_back(std::move(lv));
  }
  return j;
}

/// One horizontal row per level (deepest at the bottom), vertices at the given unit-interval
/// positions, upward edges drawn as straight segments. positions[i] belongs to level depth + i.
std::string embedding_svg(const BratteliGraph& g, const std::vector<std::vector<double>>& positions,
                          const std::string& title);

}  // namespace filtra

#endif  // FILTRA_IO_HPP
