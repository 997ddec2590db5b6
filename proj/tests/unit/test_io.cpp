#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "filtra/io.hpp"
#include "helpers.hpp"

using namespace filtra;
using testing_support::q;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("chain documents round trip exactly") {
  auto c = bernoulli_pascal_chain<Rational>(q(1, 3), -6);
  auto j = chain_to_json(*c.chain);
  CHECK(j["schema"] == "filtra.chain");
  CHECK(j["kernels"].size() == 6);
  // exact weights are strings
  CHECK(j["kernels"][0]["rows"][0][0][1].is_string());

  auto text = j.dump();
  LeveledChain<Rational> back(chain_rule_from_json<Rational>(nlohmann::json::parse(text)), -6);
  for (int n = -5; n <= 0; ++n) CHECK(*back.kernel_into(n) == *c.chain->kernel_into(n));
  for (int n = -6; n <= 0; ++n) CHECK(back.marginal(n) == c.chain->marginal(n));

  // a replayed chain drives the same ladder
  auto rho = LevelMetric<Rational>::discrete(back.space(-1));
  auto a = intrinsic_metrics(back, -1, rho, -6);
  auto b = intrinsic_metrics(*c.chain, -1, rho, -6);
  for (int n = -1; n >= -6; --n) CHECK(a.at(n).matrix() == b.at(n).matrix());
}

TEST_CASE("float chain documents accept fraction strings") {
  auto c = multinomial_multipascal_chain<double>({0.25, 0.25, 0.5}, -3);
  auto j = chain_to_json(*c.chain);
  CHECK(j["mode"] == "float");
  CHECK(j["kernels"][0]["rows"][0][0][1].is_number());
  j["seed"][0] = Rational(j["seed"][0].get<double>()).get_str();  // same value as a fraction
  LeveledChain<double> back(chain_rule_from_json<double>(j), -3);
  CHECK(back.space(-2)->size() == c.chain->space(-2)->size());
  CHECK(back.kernel_into(-1)->row_entries(0).size() == c.chain->kernel_into(-1)->row_entries(0).size());
}

TEST_CASE("malformed chain documents are rejected") {
  auto c = square_walk_chain<Rational>(-3);
  auto j = chain_to_json(c);
  auto bad = j;
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(chain_rule_from_json<Rational>(bad), Error);
  bad = j;
  bad["kernels"].erase(bad["kernels"].begin());
  CHECK_THROWS_AS(chain_rule_from_json<Rational>(bad), Error);
  bad = j;
  bad["kernels"][0]["rows"][0][0][1] = 0.5;
  CHECK_THROWS_AS(chain_rule_from_json<Rational>(bad), Error);
}

TEST_CASE("graph documents round trip") {
  for (auto g : {pascal_graph(-5), euler_graph(-5), next_jump_graph(-4), odometer_graph(-4), multipascal_graph(3, -4)}) {
    auto j = graph_to_json(*g);
    auto back = graph_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back->tag() == g->tag());
    CHECK(back->depth() == g->depth());
    for (int n = g->depth(); n < 0; ++n)
      for (std::size_t v = 0; v < g->vertices(n)->size(); ++v) {
        auto a = g->up(n, v);
        auto b = back->up(n, v);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          CHECK(a[i].to == b[i].to);
          CHECK(a[i].mult == b[i].mult);
        }
      }
    for (int n = g->depth(); n <= 0; ++n) CHECK(back->dims(n) == g->dims(n));
  }
}

TEST_CASE("graph documents are validated") {
  auto j = graph_to_json(*pascal_graph(-3));
  j["edges"].push_back({-1, 0, 1, 1});  // repeats an existing edge
  CHECK_THROWS_AS(graph_from_json(j), Error);
  j = graph_to_json(*pascal_graph(-3));
  j["edges"].push_back({-2, 0, 7, 1});
  CHECK_THROWS_AS(graph_from_json(j), Error);
}

TEST_CASE("metric CSV keeps fractions and quotes tuple labels") {
  auto c = bernoulli_pascal_chain<Rational>(q(1, 2), -3);
  auto ladder = intrinsic_metrics(*c.chain, -1, LevelMetric<Rational>::discrete(c.chain->space(-1)), -3);
  auto csv = metric_csv(ladder);
  CHECK(csv.rfind("level,v,v',value\n", 0) == 0);
  CHECK(csv.find("-3,0,1,1/3\n") != std::string::npos);
  CHECK(csv.find("-3,0,3,1\n") != std::string::npos);

  auto m = multinomial_multipascal_chain<Rational>({q(1, 3), q(1, 3), q(1, 3)}, -2);
  auto w = std::vector<Rational>{q(1, 3), q(1, 3), q(1, 3)};
  auto l2 = intrinsic_metrics(*m.chain, -1, LevelMetric<Rational>::weighted_l1(m.chain->space(-1), w), -2);
  auto csv2 = metric_csv(l2);
  CHECK(csv2.find("\"(") != std::string::npos);
}

TEST_CASE("atomic writes replace the target and leave no temporaries") {
  auto dir = std::filesystem::temp_directory_path() / "filtra_io_test";
  std::filesystem::create_directories(dir);
  auto target = dir / "out.txt";
  write_atomic(target.string(), "first\n");
  write_atomic(target.string(), "second\n");
  CHECK(slurp(target) == "second\n");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 1);
  CHECK_THROWS_AS(write_atomic((dir / "missing" / "x.txt").string(), "x"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("embedding SVG places Pascal vertices at v/|n|") {
  auto c = bernoulli_pascal_chain<Rational>(q(1, 2), -4);
  std::vector<std::vector<double>> pos;
  for (int n = -4; n <= -1; ++n) {
    std::vector<double> row;
    for (const auto& x : embedding_coordinates(c, n)) row.push_back(x.get_d());
    pos.push_back(row);
  }
  CHECK(pos[0] == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  auto svg = embedding_svg(*c.graph, pos, "pascal");
  CHECK(svg.find("version=\"1.1\"") != std::string::npos);
  // 5 + 4 + 3 + 2 vertices, 2 * (4 + 3 + 2) edges
  auto count = [&](const std::string& tag) {
    std::size_t k = 0;
    for (auto p = svg.find(tag); p != std::string::npos; p = svg.find(tag, p + 1)) ++k;
    return k;
  };
  CHECK(count("<circle") == 14);
  CHECK(count("<line") == 18);
}
