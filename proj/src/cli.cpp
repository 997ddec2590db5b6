#include "filtra/cli.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "filtra/bratteli.hpp"
#include "filtra/io.hpp"
#include "filtra/standardness.hpp"

namespace filtra {

namespace {

struct VerificationFailure : Error {
  using Error::Error;
};

// ---- lambda rules ----

class RuleParser {
 public:
  using Fn = std::function<double(double n, double abs_n)>;

  explicit RuleParser(std::string s) : s_(std::move(s)) {}

  Fn parse() {
    auto f = expr();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + s_.substr(i_) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError("lambda rule: " + what); }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  bool eat_word(const std::string& w) {
    skip();
    if (s_.compare(i_, w.size(), w) == 0) {
      i_ += w.size();
      return true;
    }
    return false;
  }

  Fn expr() {
    Fn f = term();
    for (;;) {
      if (eat('+')) {
        Fn g = term();
        f = [f, g](double n, double a) { return f(n, a) + g(n, a); };
      } else if (eat('-')) {
        Fn g = term();
        f = [f, g](double n, double a) { return f(n, a) - g(n, a); };
      } else {
        return f;
      }
    }
  }
  Fn term() {
    Fn f = power();
    for (;;) {
      if (eat('*')) {
        Fn g = power();
        f = [f, g](double n, double a) { return f(n, a) * g(n, a); };
      } else if (eat('/')) {
        Fn g = power();
        f = [f, g](double n, double a) { return f(n, a) / g(n, a); };
      } else {
        return f;
      }
    }
  }
  Fn power() {
    Fn f = unary();
    if (eat('^')) {
      Fn g = power();
      return [f, g](double n, double a) { return std::pow(f(n, a), g(n, a)); };
    }
    return f;
  }
  Fn unary() {
    if (eat('-')) {
      Fn f = unary();
      return [f](double n, double a) { return -f(n, a); };
    }
    return primary();
  }
  Fn primary() {
    if (eat_word("|n|")) return [](double, double a) { return a; };
    for (const char* name : {"exp", "log", "sqrt"}) {
      if (eat_word(std::string(name) + "(")) {
        Fn f = expr();
        if (!eat(')')) fail("missing ')'");
        const std::string fn = name;
        if (fn == "exp") return [f](double n, double a) { return std::exp(f(n, a)); };
        if (fn == "log") return [f](double n, double a) { return std::log(f(n, a)); };
        return [f](double n, double a) { return std::sqrt(f(n, a)); };
      }
    }
    if (eat('n')) return [](double n, double) { return n; };
    if (eat('(')) {
      Fn f = expr();
      if (!eat(')')) fail("missing ')'");
      return f;
    }
    skip();
    const char* begin = s_.c_str() + i_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number, |n| or n at '" + s_.substr(i_) + "'");
    i_ += static_cast<std::size_t>(end - begin);
    return [v](double, double) { return v; };
  }

  std::string s_;
  std::size_t i_ = 0;
};

// ---- option parsing helpers ----

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<Rational> parse_rationals(const std::string& s, const char* what) {
  std::vector<Rational> out;
  try {
    for (const auto& part : split(s, ',')) out.push_back(parse_rational(part));
  } catch (const Error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
  return out;
}

template <Numeric T>
std::vector<T> convert(const std::vector<Rational>& v) {
  std::vector<T> out;
  for (const auto& x : v) out.push_back(Num<T>::from_rational(x));
  return out;
}

// ---- selectors ----

struct Selector {
  std::string kind;
  std::string p = "1/2";
  std::string theta;
  std::string weights;
  std::string rule = "lambda=|n|+1";
  double tail = 1e-9;
  int d = 3;
  bool exact = true;
  bool float_mode = false;
};

bool is_graph_kind(const std::string& k) {
  return k == "pascal" || k == "euler" || k == "multipascal" || k == "odometer" || k == "next-jump";
}

template <Numeric T>
struct Built {
  std::shared_ptr<const LeveledChain<T>> chain;
  GraphPtr graph;
  int n0 = 0;
  std::optional<LevelMetric<T>> rho0;
  std::string metric_name;
  std::vector<T> weights;  // multipascal coordinate weights
  std::vector<Rational> exact_weights;
  std::string description;
};

template <Numeric T>
Built<T> from_central(CentralChain<T> c) {
  Built<T> b;
  b.graph = c.graph;
  b.chain = c.chain;
  b.n0 = -1;
  b.rho0 = LevelMetric<T>::discrete(c.graph->vertices(-1));
  b.metric_name = "discrete";
  return b;
}

template <Numeric T>
Built<T> build(const Selector& s, int depth) {
  if (depth > -1) throw ConfigError("depth must be at least 1");
  const auto& k = s.kind;
  if (k == "pascal") {
    auto p = parse_rationals(s.p, "--p");
    if (p.size() != 1 || p[0] <= 0 || p[0] >= 1) throw ConfigError("--p must be a single value in (0, 1)");
    auto b = from_central(bernoulli_pascal_chain<T>(Num<T>::from_rational(p[0]), depth));
    b.description = "pascal p=" + p[0].get_str();
    return b;
  }
  if (k == "euler") {
    auto b = from_central(symmetric_euler_chain<T>(depth));
    b.description = "euler symmetric";
    return b;
  }
  if (k == "odometer") {
    auto b = from_central(odometer_chain<T>(depth));
    b.description = "odometer uniform";
    return b;
  }
  if (k == "next-jump") {
    auto b = from_central(next_jump_chain<T>(depth));
    b.description = "next-jump uniform-edges";
    return b;
  }
  if (k == "multipascal") {
    if (s.d < 2) throw ConfigError("--d must be at least 2");
    auto theta = s.theta.empty() ? std::vector<Rational>(static_cast<std::size_t>(s.d), Rational(1, s.d))
                                 : parse_rationals(s.theta, "--theta");
    if (theta.size() != static_cast<std::size_t>(s.d)) throw ConfigError("--theta needs d entries");
    Rational sum = 0;
    for (auto& t : theta) {
      t.canonicalize();
      if (t <= 0) throw ConfigError("--theta entries must be positive");
      sum += t;
    }
    if (sum != 1) throw ConfigError("--theta must sum to 1");
    auto w = s.weights.empty() ? std::vector<Rational>(static_cast<std::size_t>(s.d), Rational(1, s.d))
                               : parse_rationals(s.weights, "--weights");
    if (w.size() != static_cast<std::size_t>(s.d)) throw ConfigError("--weights needs d entries");
    Rational wsum = 0;
    for (auto& x : w) {
      x.canonicalize();
      if (x <= 0) throw ConfigError("--weights entries must be positive");
      wsum += x;
    }
    if (wsum != 1) throw ConfigError("--weights must sum to 1");
    auto c = multinomial_multipascal_chain<T>(convert<T>(theta), depth);
    Built<T> b;
    b.graph = c.graph;
    b.chain = c.chain;
    b.n0 = -1;
    b.weights = convert<T>(w);
    b.exact_weights = w;
    b.rho0 = LevelMetric<T>::weighted_l1(c.graph->vertices(-1), b.weights);
    b.metric_name = "weighted-l1";
    b.description = "multipascal d=" + std::to_string(s.d);
    return b;
  }
  if (k == "square-walk") {
    Built<T> b;
    b.chain = std::make_shared<const LeveledChain<T>>(square_walk_rule<T>(), depth);
    b.n0 = 0;
    b.rho0 = LevelMetric<T>::discrete(b.chain->space(0));
    b.metric_name = "discrete";
    b.description = "square-walk";
    return b;
  }
  if (k == "poisson") {
    if constexpr (Num<T>::exact) {
      throw ConfigError("the Poisson chain runs in float mode only (use --float)");
    } else {
      auto rule = parse_lambda_rule(s.rule);
      Built<T> b;
      PoissonOptions opt;
      opt.tail_bound = s.tail;
      try {
        b.chain = std::make_shared<const LeveledChain<T>>(poisson_rule(rule, depth, opt), depth);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      b.n0 = 0;
      b.rho0 = LevelMetric<T>::absolute(b.chain->space(0));
      b.metric_name = "absolute";
      b.description = "poisson " + s.rule;
      return b;
    }
  }
  throw ConfigError("unknown chain '" + k + "'");
}

// ---- output ----

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_atomic(path, content);
  }
}

std::string fixed(double v, int prec = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// ---- metrics ----

struct MetricsOpts {
  Selector sel;
  int depth = 0;
  bool verify = false;
  std::string format = "text";
  std::string out;
};

template <Numeric T>
int metrics_cmd(const MetricsOpts& o, std::ostream& out, std::ostream& err) {
  if (!is_graph_kind(o.sel.kind)) throw ConfigError("metrics needs a graph: pascal, euler, multipascal, odometer, next-jump");
  if (o.depth < 1) throw ConfigError("--depth must be at least 1");
  auto b = build<T>(o.sel, -o.depth);
  auto ladder = intrinsic_metrics(*b.chain, b.n0, *b.rho0, -o.depth);

  long mismatches = 0;
  if (o.verify) {
    if (b.graph->tag() != GraphTag::pascal && b.graph->tag() != GraphTag::euler &&
        b.graph->tag() != GraphTag::multipascal)
      throw ConfigError(std::string("no closed form to verify against for ") + to_string(b.graph->tag()));
    const auto& w = b.exact_weights;
    for (int n = -1; n >= -o.depth; --n) {
      auto closed = closed_form_intrinsic(*b.graph, n, w);
      const auto& rho = ladder.at(n);
      for (std::size_t x = 0; x < rho.size(); ++x)
        for (std::size_t y = x + 1; y < rho.size(); ++y) {
          bool same;
          if constexpr (Num<T>::exact) {
            same = rho(x, y) == closed(x, y);
          } else {
            same = std::abs(rho(x, y) - closed(x, y).get_d()) <= 1e-9;
          }
          if (!same) {
            if (mismatches == 0)
              err << "mismatch at level " << n << " (" << rho.space()->label(x) << "," << rho.space()->label(y)
                  << "): ladder " << Num<T>::to_string(rho(x, y)) << ", closed form " << closed(x, y).get_str()
                  << "\n";
            ++mismatches;
          }
        }
    }
  }

  std::string content;
  if (o.format == "csv") {
    content = metric_csv(ladder);
  } else if (o.format == "json") {
    auto j = metric_json(ladder);
    if (o.verify) j["verified"] = mismatches == 0;
    content = j.dump(2) + "\n";
  } else if (o.format == "text") {
    std::ostringstream os;
    os << "intrinsic metrics: " << b.description << ", initial " << b.metric_name << " at level " << b.n0 << ", "
       << (Num<T>::exact ? "exact" : "float") << "\n";
    for (int n = ladder.top(); n >= ladder.bottom(); --n) {
      const auto& rho = ladder.at(n);
      os << "\nlevel " << n << " (" << (rho.kind() == MetricKind::metric ? "metric" : "pseudometric")
         << (rho.linear() ? ", linear" : "") << ")\n";
      for (std::size_t x = 0; x < rho.size(); ++x) {
        os << std::setw(10) << rho.space()->label(x) << " ";
        for (std::size_t y = 0; y < rho.size(); ++y) os << " " << Num<T>::to_string(rho(x, y));
        os << "\n";
      }
    }
    if (o.verify) os << "\nclosed-form check: " << (mismatches == 0 ? "ok" : "FAILED") << "\n";
    content = os.str();
  } else {
    throw ConfigError("--format must be text, csv or json");
  }
  emit(o.out, content, out);
  if (mismatches > 0) throw VerificationFailure(std::to_string(mismatches) + " pairs differ from the closed form");
  return kExitOk;
}

// ---- standardness ----

struct StandardnessOpts {
  Selector sel;
  std::vector<int> ladder{8, 16, 32, 64};
  double floor = 0.05;
  double decay_tol = 0.05;
  std::string transport = "automatic";
  std::string format = "text";
  std::string out;
};

template <Numeric T>
int standardness_cmd(const StandardnessOpts& o, std::ostream& out) {
  if (o.ladder.empty()) throw ConfigError("--ladder must not be empty");
  for (int w : o.ladder)
    if (w < 1) throw ConfigError("--ladder entries must be positive");
  const int deepest = *std::max_element(o.ladder.begin(), o.ladder.end());
  auto b = build<T>(o.sel, -deepest);
  StandardnessConfig cfg;
  cfg.window = o.ladder;
  cfg.n0 = b.n0;
  cfg.rule.floor = o.floor;
  cfg.rule.decay_tol = o.decay_tol;
  if (o.transport == "simplex") {
    cfg.lift.method = TransportMethod::simplex;
  } else if (o.transport != "automatic") {
    throw ConfigError("--transport must be automatic or simplex");
  }
  for (int w : o.ladder)
    if (-w >= b.n0) throw ConfigError("--ladder levels must lie below the initial metric level " + std::to_string(b.n0));
  auto rep = standardness_report(*b.chain, *b.rho0, cfg, b.metric_name);
  rep.chain = b.description;
  if (o.format == "json") {
    emit(o.out, rep.to_json(), out);
  } else if (o.format == "text") {
    emit(o.out, rep.to_text(), out);
  } else {
    throw ConfigError("--format must be text or json");
  }
  return kExitOk;
}

// ---- simulate ----

struct SimulateOpts {
  Selector sel;
  std::string what;
  int n = 1;  // 1 = default observation level
  std::vector<int> ms{25, 50, 100, 200};
  std::vector<int> starts{25, 50, 75, 100};
  std::size_t trials = 10000;
  std::optional<std::uint64_t> seed;
  std::string policy = "minimizing";
  bool skip_exact = false;
  std::size_t cap = 4'000'000;
  std::string format = "text";
  std::string out;
};

StartPolicy parse_policy(const std::string& p) {
  if (p == "minimizing") return StartPolicy::minimizing;
  if (p == "median") return StartPolicy::median;
  throw ConfigError("--policy must be minimizing or median");
}

template <Numeric T>
int simulate_pw(const SimulateOpts& o, std::ostream& out) {
  if (o.ms.empty()) throw ConfigError("--ms must not be empty");
  if (o.trials < 1) throw ConfigError("--trials must be positive");
  const int deepest = *std::max_element(o.ms.begin(), o.ms.end());
  auto b = build<T>(o.sel, -deepest);
  const int n = o.n == 1 ? b.n0 : o.n;
  if (n > b.n0) throw ConfigError("--n must not exceed the initial metric level " + std::to_string(b.n0));
  for (int m : o.ms)
    if (-m >= n) throw ConfigError("--ms levels must lie below --n");
  const auto policy = parse_policy(o.policy);
  auto ladder = intrinsic_metrics(*b.chain, b.n0, *b.rho0, n);
  const auto& rho = ladder.at(n);

  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream text;
  text << "Propp-Wilson decay: " << b.description << ", n=" << n << ", policy=" << o.policy << ", trials=" << o.trials
       << ", seed=" << *o.seed << "\n";
  text << std::left << std::setw(8) << "m" << std::setw(10) << "x_m" << std::setw(14) << "mc_mean" << std::setw(14)
       << "mc_stderr" << std::setw(14) << "exact_approx" << "exact\n";
  std::ostringstream csv;
  csv << "m,x_m,mc_mean,mc_stderr,exact_approx,exact\n";
  std::vector<int> ms = o.ms;
  std::sort(ms.begin(), ms.end());
  for (int w : ms) {
    const int m = -w;
    auto x = choose_start(*b.chain, m, n, rho, policy);
    PWSampler<T> sampler(*b.chain, m, x, n);
    auto est = pw_monte_carlo(sampler, rho, o.trials, *o.seed);
    std::string exact = "skipped";
    std::string approx = "-";
    nlohmann::json exact_json = nullptr;
    if (!o.skip_exact) {
      try {
        T v = exact_pw_expectation(*b.chain, m, x, n, rho, o.cap);
        exact = Num<T>::to_string(v);
        approx = fixed(Num<T>::to_double(v));
        exact_json = {{"value", value_json(v)}, {"approx", Num<T>::to_double(v)}};
      } catch (const Error&) {
        exact = "over-cap";
      }
    }
    const auto label = b.chain->space(m)->label(x);
    text << std::left << std::setw(8) << m << std::setw(10) << label << std::setw(14) << fixed(est.mean)
         << std::setw(14) << fixed(est.std_error) << std::setw(14) << approx << exact << "\n";
    csv << m << ",\"" << label << "\"," << fixed(est.mean, 9) << ',' << fixed(est.std_error, 9) << ',' << approx << ',' << exact << "\n";
    rows.push_back({{"m", m},
                    {"x_m", label},
                    {"mc_mean", est.mean},
                    {"mc_stderr", est.std_error},
                    {"trials", est.trials},
                    {"exact", exact_json}});
  }
  if (o.format == "json") {
    nlohmann::json j;
    j["schema"] = "filtra.simulation";
    j["schema_version"] = 1;
    j["kind"] = "propp-wilson";
    j["chain"] = b.description;
    j["mode"] = Num<T>::exact ? "exact" : "float";
    j["n"] = n;
    j["policy"] = o.policy;
    j["trials"] = o.trials;
    j["seed"] = *o.seed;
    j["metric"] = b.metric_name;
    j["rows"] = rows;
    emit(o.out, j.dump(2) + "\n", out);
  } else if (o.format == "csv") {
    emit(o.out, csv.str(), out);
  } else if (o.format == "text") {
    emit(o.out, text.str(), out);
  } else {
    throw ConfigError("--format must be text, csv or json");
  }
  return kExitOk;
}

int simulate_cascade(const SimulateOpts& o, std::ostream& out) {
  if (o.starts.size() < 2) throw ConfigError("--starts needs at least two levels");
  if (o.trials < 1) throw ConfigError("--trials must be positive");
  std::vector<int> starts = o.starts;
  std::sort(starts.begin(), starts.end());
  if (std::adjacent_find(starts.begin(), starts.end()) != starts.end()) throw ConfigError("--starts must be distinct");
  const int deepest = starts.back();
  auto b = build<double>(o.sel, -deepest);
  if (!b.chain->has_coupler()) throw ConfigError("chain '" + o.sel.kind + "' has no coupling constructor");
  const int to = o.n == 1 ? b.n0 : o.n;
  if (to > b.n0) throw ConfigError("--n must not exceed the initial metric level " + std::to_string(b.n0));
  CascadeConfig cfg;
  for (int s : starts) cfg.starts.push_back(-s);
  if (cfg.starts.front() >= to) throw ConfigError("--starts must lie below --n");
  cfg.to = to;
  cfg.policy = parse_policy(o.policy);
  cfg.trials = o.trials;
  cfg.seed = *o.seed;

  // intrinsic metric at each report level
  PointMetric metric;
  std::shared_ptr<MetricLadder<double>> ladder;
  auto graph = b.graph;
  if (graph && graph->tag() == GraphTag::multipascal) {
    ladder = std::make_shared<MetricLadder<double>>(intrinsic_metrics(*b.chain, b.n0, *b.rho0, to));
    auto w = b.weights;
    metric = [graph, w](int level, std::size_t x, std::size_t y) {
      const auto& s = graph->vertices(level);
      double d = 0;
      for (std::size_t i = 0; i < w.size(); ++i) d += w[i] * std::abs(s->state(x)[i] - s->state(y)[i]);
      return d / static_cast<double>(-level);
    };
  } else {
    ladder = std::make_shared<MetricLadder<double>>(intrinsic_metrics(*b.chain, b.n0, *b.rho0, -deepest));
    metric = [ladder](int level, std::size_t x, std::size_t y) { return ladder->at(level)(x, y); };
  }
  auto table = coupling_cascade_simulation(*b.chain, ladder->at(to), metric, cfg);

  std::ostringstream text, csv;
  nlohmann::json cells = nlohmann::json::array();
  text << "coupling cascade: " << b.description << ", scored at n=" << to << ", policy=" << o.policy
       << ", trials=" << o.trials << ", seed=" << *o.seed << "\n";
  text << "starts:";
  for (std::size_t j = 0; j < table.starts.size(); ++j)
    text << " n_" << j + 1 << "=" << table.starts[j] << " (x=" << b.chain->space(table.starts[j])->label(table.start_states[j]) << ")";
  text << "\n" << std::left << std::setw(6) << "j" << std::setw(8) << "level" << std::setw(14) << "mean"
       << "stderr\n";
  csv << "j,level,mean,stderr\n";
  for (const auto& c : table.cells) {
    text << std::left << std::setw(6) << c.j << std::setw(8) << c.level << std::setw(14) << fixed(c.estimate.mean)
         << fixed(c.estimate.std_error) << "\n";
    csv << c.j << ',' << c.level << ',' << fixed(c.estimate.mean, 9) << ',' << fixed(c.estimate.std_error, 9) << "\n";
    cells.push_back({{"j", c.j}, {"level", c.level}, {"mean", c.estimate.mean}, {"stderr", c.estimate.std_error}});
  }
  if (o.format == "json") {
    nlohmann::json j;
    j["schema"] = "filtra.simulation";
    j["schema_version"] = 1;
    j["kind"] = "cascade";
    j["chain"] = b.description;
    j["mode"] = "float";
    j["scored_level"] = to;
    j["starts"] = table.starts;
    j["start_states"] = nlohmann::json::array();
    for (std::size_t i = 0; i < table.starts.size(); ++i)
      j["start_states"].push_back(b.chain->space(table.starts[i])->label(table.start_states[i]));
    j["policy"] = o.policy;
    j["trials"] = o.trials;
    j["seed"] = *o.seed;
    j["cells"] = cells;
    emit(o.out, j.dump(2) + "\n", out);
  } else if (o.format == "csv") {
    emit(o.out, csv.str(), out);
  } else if (o.format == "text") {
    emit(o.out, text.str(), out);
  } else {
    throw ConfigError("--format must be text, csv or json");
  }
  return kExitOk;
}

// ---- embed ----

struct EmbedOpts {
  Selector sel;
  int depth = 12;
  std::string format = "svg";
  std::string out;
};

template <Numeric T>
int embed_cmd(const EmbedOpts& o, std::ostream& out) {
  if (!is_graph_kind(o.sel.kind)) throw ConfigError("embed needs a graph");
  if (o.sel.kind == "multipascal") throw ConfigError("embed draws one-dimensional graphs only");
  if (o.format != "svg") throw ConfigError("--format must be svg");
  if (o.depth < 1) throw ConfigError("--depth must be at least 1");
  CentralChain<T> c;
  if (o.sel.kind == "pascal") {
    c = bernoulli_pascal_chain<T>(Num<T>::ratio(1, 2), -o.depth);
  } else if (o.sel.kind == "euler") {
    c = symmetric_euler_chain<T>(-o.depth);
  } else if (o.sel.kind == "odometer") {
    c = odometer_chain<T>(-o.depth);
  } else {
    c = next_jump_chain<T>(-o.depth);
  }
  std::vector<std::vector<double>> pos;
  for (int n = -o.depth; n <= -1; ++n) {
    std::vector<double> row;
    for (const auto& x : embedding_coordinates(c, n)) row.push_back(Num<T>::to_double(x));
    pos.push_back(std::move(row));
  }
  emit(o.out, embedding_svg(*c.graph, pos, std::string(to_string(c.graph->tag())) + " graph under the intrinsic metrics"),
       out);
  return kExitOk;
}

// ---- eulerian ----

struct EulerianOpts {
  int n = 0;
  int depth = 0;
  bool check = false;
  std::string out;
};

int eulerian_cmd(const EulerianOpts& o, std::ostream& out) {
  if (o.n == 0 && o.depth == 0) throw ConfigError("give --n or --depth");
  if (o.n < 0 || o.depth < 0) throw ConfigError("--n and --depth must be positive");
  std::ostringstream os;
  bool ok = true;
  if (o.n > 0) {
    for (int k = 0; k < o.n; ++k) os << (k ? " " : "") << eulerian(o.n, k).get_str();
    os << "\n";
  }
  if (o.depth > 0) {
    os << "A(n,k), n = 1.." << o.depth + 1 << "\n";
    for (int n = 1; n <= o.depth + 1; ++n) {
      for (int k = 0; k < n; ++k) os << (k ? " " : "") << eulerian(n, k).get_str();
      os << "\n";
    }
    os << "A01(|n|-v, v-1) for v = 1..|n|, |n| = 1.." << o.depth << "\n";
    for (int m = 1; m <= o.depth; ++m) {
      for (int v = 1; v <= m; ++v) os << (v > 1 ? " " : "") << generalized_eulerian_A01(m - v, v - 1).get_str();
      os << "\n";
    }
    if (o.check) {
      auto g = euler_graph(-o.depth);
      // paths from each vertex to vertex 1 at level -1
      std::vector<BigInt> to_one{BigInt(0), BigInt(1)};
      for (int n = -1; n >= -o.depth; --n) {
        if (n < -1) {
          std::vector<BigInt> next(g->vertices(n)->size(), BigInt(0));
          for (std::size_t v = 0; v < next.size(); ++v)
            for (const auto& e : g->up(n, v)) next[v] += e.mult * to_one[e.to];
          to_one = std::move(next);
        }
        for (int v = 0; v <= -n; ++v) {
          if (g->dim(n, static_cast<std::size_t>(v)) != eulerian(-n + 1, v)) ok = false;
          if (v >= 1 && generalized_eulerian_A01(-n - v, v - 1) != to_one[static_cast<std::size_t>(v)]) ok = false;
        }
      }
      os << "check (dims = A(|n|+1, v), A01 formula = path counts, depth " << o.depth << "): "
         << (ok ? "ok" : "FAILED") << "\n";
    }
  }
  emit(o.out, os.str(), out);
  if (!ok) throw VerificationFailure("Eulerian identities failed");
  return kExitOk;
}

void add_selector(CLI::App* app, Selector& s, const char* name) {
  app->add_option(name, s.kind, "chain or graph: pascal, euler, multipascal, odometer, next-jump, square-walk, poisson")
      ->required();
  app->add_option("--p", s.p, "Bernoulli parameter for pascal");
  app->add_option("--theta", s.theta, "multinomial parameters for multipascal, e.g. 1/3,1/3,1/3");
  app->add_option("--d", s.d, "multipascal dimension");
  app->add_option("--weights", s.weights, "coordinate weights a_k of the multipascal initial metric");
  app->add_option("--rule", s.rule, "Poisson mean rule, e.g. \"lambda=|n|+1\"");
  app->add_option("--tail", s.tail, "Poisson truncation tail bound");
  auto* ex = app->add_flag("--exact", s.exact, "exact rational arithmetic (default)");
  auto* fl = app->add_flag("--float", s.float_mode, "double precision");
  ex->excludes(fl);
}

}  // namespace

LambdaRule parse_lambda_rule(const std::string& text) {
  auto eq = text.find('=');
  std::string body = text;
  if (eq != std::string::npos) {
    std::string head = text.substr(0, eq);
    head.erase(std::remove_if(head.begin(), head.end(), [](unsigned char c) { return std::isspace(c); }), head.end());
    if (head != "lambda") throw ConfigError("lambda rule must look like lambda=<expression>");
    body = text.substr(eq + 1);
  }
  auto f = RuleParser(body).parse();
  return [f](int level) { return f(static_cast<double>(level), std::abs(static_cast<double>(level))); };
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"filtra: intrinsic metrics, standardness diagnostics and coupling from the past", "filtra"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "filtra 1.0");

  MetricsOpts mo;
  auto* metrics = app.add_subcommand("metrics", "intrinsic metric ladders of a graph");
  add_selector(metrics, mo.sel, "--graph");
  metrics->add_option("--depth", mo.depth, "deepest level |n|")->required();
  metrics->add_flag("--verify", mo.verify, "compare with the closed form; exit 3 on mismatch");
  metrics->add_option("--format", mo.format, "text | csv | json");
  metrics->add_option("--out", mo.out, "output file (default stdout)");

  StandardnessOpts so;
  auto* stand = app.add_subcommand("standardness", "V' and tail-criterion diagnostics with a hedged verdict");
  add_selector(stand, so.sel, "--chain");
  stand->add_option("--ladder", so.ladder, "window sizes |n|, e.g. 8,16,32,64")->delimiter(',');
  stand->add_option("--floor", so.floor, "floor for 'bounded away from 0'");
  stand->add_option("--decay-tol", so.decay_tol, "fitted slopes above -tol count as no decay");
  stand->add_option("--transport", so.transport, "automatic | simplex");
  stand->add_option("--format", so.format, "text | json");
  stand->add_option("--out", so.out, "output file (default stdout)");

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Propp-Wilson decay tables or coupling cascades");
  simulate->add_option("kind", sim.what, "pw | cascade")->required();
  add_selector(simulate, sim.sel, "--chain");
  simulate->add_option("--n", sim.n, "observation level (default: initial metric level)");
  simulate->add_option("--ms", sim.ms, "start depths |m| for pw, e.g. 25,50,100")->delimiter(',');
  simulate->add_option("--starts", sim.starts, "cascade start depths |n_j|, e.g. 25,50,75,100")->delimiter(',');
  simulate->add_option("--trials", sim.trials, "Monte Carlo trials");
  simulate->add_option("--seed", sim.seed, "random seed (required)");
  simulate->add_option("--policy", sim.policy, "minimizing | median");
  simulate->add_flag("--no-exact", sim.skip_exact, "skip the exact joint-chain expectation");
  simulate->add_option("--cap", sim.cap, "largest product space for exact expectations");
  simulate->add_option("--format", sim.format, "text | csv | json");
  simulate->add_option("--out", sim.out, "output file (default stdout)");

  EmbedOpts eo;
  auto* embed = app.add_subcommand("embed", "SVG of a graph placed by its intrinsic-metric embedding");
  add_selector(embed, eo.sel, "--graph");
  embed->add_option("--depth", eo.depth, "deepest level |n|");
  embed->add_option("--format", eo.format, "svg");
  embed->add_option("--out", eo.out, "output file (default stdout)");

  EulerianOpts uo;
  auto* eul = app.add_subcommand("eulerian", "Eulerian and generalized Eulerian numbers");
  eul->add_option("--n", uo.n, "print A(n, k) for k = 0..n-1");
  eul->add_option("--depth", uo.depth, "print tables up to this depth");
  eul->add_flag("--check", uo.check, "check the formulas against path counts; exit 3 on failure");
  eul->add_option("--out", uo.out, "output file (default stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "filtra 1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*metrics) return mo.sel.float_mode ? metrics_cmd<double>(mo, out, err) : metrics_cmd<Rational>(mo, out, err);
    if (*stand) {
      const bool fl = so.sel.float_mode || (so.sel.kind == "poisson" && !stand->count("--exact"));
      return fl ? standardness_cmd<double>(so, out) : standardness_cmd<Rational>(so, out);
    }
    if (*simulate) {
      if (!sim.seed) throw ConfigError("--seed is required for simulations");
      if (sim.what == "pw") {
        const bool fl = sim.sel.float_mode || (sim.sel.kind == "poisson" && !simulate->count("--exact"));
        return fl ? simulate_pw<double>(sim, out) : simulate_pw<Rational>(sim, out);
      }
      if (sim.what == "cascade") {
        if (simulate->count("--exact")) throw ConfigError("cascades run in float mode");
        return simulate_cascade(sim, out);
      }
      throw ConfigError("simulate kind must be pw or cascade");
    }
    if (*embed) return eo.sel.float_mode ? embed_cmd<double>(eo, out) : embed_cmd<Rational>(eo, out);
    if (*eul) return eulerian_cmd(uo, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << "\n";
    return kExitVerification;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}

}  // namespace filtra
