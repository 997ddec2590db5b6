#include "filtra/standardness.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace filtra {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent with standardness";
    case Verdict::inconsistent: return "inconsistent (statistic bounded away from 0)";
    default: return "inconclusive";
  }
}

double fitted_decay_exponent(const std::vector<int>& sizes, const std::vector<double>& values) {
  if (sizes.size() != values.size() || sizes.empty()) throw Error("decay fit: column length mismatch");
  if (values.back() <= 0.0) return -std::numeric_limits<double>::infinity();
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (values[i] <= 0.0) continue;
    xs.push_back(std::log(static_cast<double>(sizes[i])));
    ys.push_back(std::log(values[i]));
  }
  if (xs.size() < 2) return 0.0;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

Verdict classify_column(const std::vector<int>& sizes, const std::vector<double>& values, const VerdictRule& rule) {
  const double slope = fitted_decay_exponent(sizes, values);
  const bool decays = slope < -rule.decay_tol;
  if (decays && values.back() < rule.floor) return Verdict::consistent;
  if (!decays && *std::min_element(values.begin(), values.end()) > rule.floor) return Verdict::inconsistent;
  return Verdict::inconclusive;
}

Verdict combine_verdicts(const std::vector<Verdict>& columns) {
  const bool any_c = std::find(columns.begin(), columns.end(), Verdict::consistent) != columns.end();
  const bool any_i = std::find(columns.begin(), columns.end(), Verdict::inconsistent) != columns.end();
  if (any_c && !any_i) return Verdict::consistent;
  if (any_i && !any_c) return Verdict::inconsistent;
  return Verdict::inconclusive;
}

namespace {

std::string flag(const std::optional<bool>& f) {
  if (!f) return "n/a";
  return *f ? "yes" : "no";
}

nlohmann::json flag_json(const std::optional<bool>& f) {
  if (!f) return nullptr;
  return *f;
}

nlohmann::json scalar_json(const Scalar& s) {
  if (s.is_exact()) return {{"exact", s.to_string()}, {"approx", s.to_double()}};
  return {{"approx", s.to_double()}};
}

std::string slope_text(double s) {
  if (std::isinf(s)) return "-inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << s;
  return os.str();
}

}  // namespace

std::string StandardnessReport::to_text() const {
  std::ostringstream os;
  os << "chain: " << chain << "\n";
  os << "mode: " << mode << "\n";
  os << "initial metric: " << initial_metric << " at level " << config.n0 << "\n\n";
  os << std::left << std::setw(8) << "level" << std::setw(14) << "vprime" << std::setw(14) << "tail"
     << std::setw(10) << "monotone" << "identifiable\n";
  for (const auto& r : rows) {
    std::ostringstream v, t;
    v << std::setprecision(6) << r.vprime.to_double();
    t << std::setprecision(6) << r.tail.to_double();
    os << std::left << std::setw(8) << r.level << std::setw(14) << v.str() << std::setw(14) << t.str()
       << std::setw(10) << flag(r.monotone) << flag(r.identifiable) << "\n";
  }
  os << "\nfitted log-log slope: vprime " << slope_text(vprime_slope) << ", tail " << slope_text(tail_slope) << "\n";
  os << "vprime column: " << filtra::to_string(vprime_verdict) << "\n";
  os << "tail column: " << filtra::to_string(tail_verdict) << "\n";
  os << "verdict: " << filtra::to_string(verdict) << " (floor " << config.rule.floor << ", finite window)\n";
  return os.str();
}

std::string StandardnessReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "filtra.standardness";
  j["schema_version"] = kSchemaVersion;
  j["chain"] = chain;
  j["mode"] = mode;
  j["initial_metric"] = {{"name", initial_metric}, {"level", config.n0}};
  j["config"] = {{"window", config.window},
                 {"floor", config.rule.floor},
                 {"decay_tol", config.rule.decay_tol},
                 {"transport", config.lift.method == TransportMethod::simplex ? "simplex" : "automatic"}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"level", r.level},
                         {"vprime", scalar_json(r.vprime)},
                         {"tail", scalar_json(r.tail)},
                         {"monotone", flag_json(r.monotone)},
                         {"identifiable", flag_json(r.identifiable)}});
  auto slope = [](double s) -> nlohmann::json {
    if (std::isinf(s)) return "-inf";
    return s;
  };
  j["fit"] = {{"vprime_slope", slope(vprime_slope)}, {"tail_slope", slope(tail_slope)}};
  j["verdict"] = {{"vprime", filtra::to_string(vprime_verdict)},
                  {"tail", filtra::to_string(tail_verdict)},
                  {"overall", filtra::to_string(verdict)}};
  return j.dump(2) + "\n";
}

}  // namespace filtra
