#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "filtra/cli.hpp"
#include "json.hpp"

using filtra::run_cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) v.push_back(l);
  return v;
}

std::vector<std::string> fields(const std::string& line, char sep) {
  std::vector<std::string> v;
  std::istringstream is(line);
  for (std::string f; std::getline(is, f, sep);) v.push_back(f);
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("metrics --verify passes for Pascal at depth 30") {
  auto r = run({"metrics", "--graph", "pascal", "--depth", "30", "--exact", "--verify"});
  CHECK(r.code == 0);
  CHECK(r.out.find("closed-form check: ok") != std::string::npos);
}

TEST_CASE("metrics CSV for Euler carries rational entries") {
  auto r = run({"metrics", "--graph", "euler", "--depth", "12", "--exact", "--format", "csv"});
  REQUIRE(r.code == 0);
  auto ls = lines(r.out);
  CHECK(ls.front() == "level,v,v',value");
  // 2 vertices at level -1 up to 13 at level -12: sum of C(k, 2)
  std::size_t pairs = 0;
  for (int k = 2; k <= 13; ++k) pairs += static_cast<std::size_t>(k * (k - 1) / 2);
  CHECK(ls.size() == pairs + 1);
  bool fraction = false;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto f = fields(ls[i], ',');
    REQUIRE(f.size() == 4);
    CHECK(f[3].find('.') == std::string::npos);
    fraction = fraction || f[3].find('/') != std::string::npos;
  }
  CHECK(fraction);
  CHECK(r.out.find("-2,0,1,1/2\n") != std::string::npos);
}

TEST_CASE("metrics rejects bad configuration with exit 2") {
  CHECK(run({"metrics", "--graph", "pascal", "--depth", "0"}).code == 2);
  CHECK(run({"metrics", "--graph", "square-walk", "--depth", "3"}).code == 2);
  CHECK(run({"metrics", "--graph", "odometer", "--depth", "3", "--verify"}).code == 2);
  CHECK(run({"metrics", "--graph", "pascal", "--depth", "3", "--p", "3/2"}).code == 2);
  CHECK(run({"metrics", "--graph", "pascal", "--depth", "3", "--exact", "--float"}).code == 2);
  CHECK(run({"metrics", "--graph", "multipascal", "--depth", "3", "--theta", "1/2,1/2"}).code == 2);
  CHECK(run({"metrics", "--graph", "multipascal", "--depth", "3", "--weights", "1/2,1/4,1/8"}).code == 2);
  CHECK(run({"metrics", "--depth", "3"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("metrics float mode and multipascal verification") {
  auto r = run({"metrics", "--graph", "euler", "--depth", "8", "--float", "--verify"});
  CHECK(r.code == 0);
  auto m = run({"metrics", "--graph", "multipascal", "--d", "3", "--depth", "5", "--verify", "--format", "json"});
  REQUIRE(m.code == 0);
  auto j = nlohmann::json::parse(m.out);
  CHECK(j["verified"] == true);
  CHECK(j["levels"].size() == 5);
  auto w = run({"metrics", "--graph", "multipascal", "--d", "2", "--weights", "1/4,3/4", "--depth", "5", "--verify"});
  CHECK(w.code == 0);
}

TEST_CASE("help exits 0") {
  auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("standardness") != std::string::npos);
}

TEST_CASE("standardness verdicts for the command-line examples") {
  auto p = run({"standardness", "--chain", "pascal", "--p", "0.5", "--ladder", "8,16,32,64"});
  REQUIRE(p.code == 0);
  CHECK(p.out.find("verdict: consistent with standardness") != std::string::npos);

  auto s = run({"standardness", "--chain", "square-walk", "--format", "json"});
  REQUIRE(s.code == 0);
  auto j = nlohmann::json::parse(s.out);
  CHECK(j["verdict"]["overall"] == "inconsistent (statistic bounded away from 0)");
  for (const auto& row : j["rows"]) CHECK(row["vprime"]["exact"] == "1/2");

  auto e = run({"standardness", "--chain", "poisson", "--exact"});
  CHECK(e.code == 2);
  CHECK(run({"standardness", "--chain", "poisson", "--rule", "lambda=|n|+"}).code == 2);
  CHECK(run({"standardness", "--chain", "poisson", "--rule", "lambda=2^(-|n|)"}).code == 2);
}

TEST_CASE("standardness for the growing Poisson rule shows a decaying column") {
  auto r = run({"standardness", "--chain", "poisson", "--rule", "lambda=|n|+1", "--ladder", "50,100,200,400",
                "--format", "json"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["rows"].size() == 4);
  for (const char* col : {"vprime", "tail"})
    for (std::size_t i = 1; i < 4; ++i)
      CHECK(j["rows"][i][col]["approx"].get<double>() < j["rows"][i - 1][col]["approx"].get<double>());
  CHECK(j["fit"]["tail_slope"].get<double>() < -0.4);
}

TEST_CASE("lambda rules") {
  auto f = filtra::parse_lambda_rule("lambda=|n|+1");
  CHECK(f(-3) == 4);
  auto g = filtra::parse_lambda_rule("lambda = 1 + 1/(|n|+1)^2");
  CHECK(g(-1) == doctest::Approx(1.25));
  auto h = filtra::parse_lambda_rule("lambda=exp(-n/10)*sqrt(4)");
  CHECK(h(-10) == doctest::Approx(2 * std::exp(1.0)));
  CHECK(filtra::parse_lambda_rule("2*2^3")(0) == 16);
  CHECK_THROWS_AS(filtra::parse_lambda_rule("mu=1"), filtra::ConfigError);
  CHECK_THROWS_AS(filtra::parse_lambda_rule("lambda=(1"), filtra::ConfigError);
  CHECK_THROWS_AS(filtra::parse_lambda_rule("lambda=x"), filtra::ConfigError);
}

TEST_CASE("simulate pw: decreasing estimates, byte-identical reruns") {
  std::vector<std::string> args{"simulate", "pw",  "--chain", "pascal",  "--p",     "0.5",    "--n",
                                "-1",       "--ms", "25,50,100,200", "--trials", "10000", "--seed", "7",
                                "--format", "csv"};
  auto a = run(args);
  REQUIRE(a.code == 0);
  auto ls = lines(a.out);
  REQUIRE(ls.size() == 5);
  double prev_mc = 2, prev_exact = 2;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    auto f = fields(ls[i], ',');
    REQUIRE(f.size() == 6);
    double mc = std::stod(f[2]), se = std::stod(f[3]), ex = std::stod(f[4]);
    CHECK(mc < prev_mc);
    CHECK(ex < prev_exact);
    CHECK(std::abs(mc - ex) <= 3 * se);
    CHECK(f[5].find('/') != std::string::npos);
    prev_mc = mc;
    prev_exact = ex;
  }
  auto b = run(args);
  CHECK(a.out == b.out);
  auto c = run({"simulate", "pw", "--chain", "pascal", "--ms", "25", "--trials", "100"});
  CHECK(c.code == 2);
  CHECK(c.err.find("--seed") != std::string::npos);
  CHECK(run({"simulate", "walk", "--chain", "pascal", "--seed", "1"}).code == 2);
}

TEST_CASE("simulate cascade: decreasing column, identical files") {
  auto dir = std::filesystem::temp_directory_path() / "filtra_cli_test";
  std::filesystem::create_directories(dir);
  std::vector<std::string> args{"simulate", "cascade", "--chain", "multipascal", "--d",    "3",
                                "--theta",  "1/3,1/3,1/3", "--seed", "7", "--format", "json",
                                "--out",    (dir / "a.json").string()};
  REQUIRE(run(args).code == 0);
  args.back() = (dir / "b.json").string();
  REQUIRE(run(args).code == 0);
  auto a = slurp(dir / "a.json");
  CHECK(a == slurp(dir / "b.json"));
  auto j = nlohmann::json::parse(a);
  CHECK(j["starts"] == std::vector<int>{-25, -50, -75, -100});
  // the column scored at level -1, one entry per coupled pair j = 1..3
  std::vector<double> col;
  for (const auto& c : j["cells"])
    if (c["level"] == -1) col.push_back(c["mean"].get<double>());
  REQUIRE(col.size() == 3);
  CHECK(col[1] < col[0]);
  CHECK(col[2] < col[1]);
  std::filesystem::remove_all(dir);
  CHECK(run({"simulate", "cascade", "--chain", "pascal", "--starts", "8", "--seed", "1"}).code == 2);
}

TEST_CASE("embed writes SVG for one-dimensional graphs") {
  auto r = run({"embed", "--graph", "pascal", "--depth", "12"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("<svg") != std::string::npos);
  CHECK(r.out.find("version=\"1.1\"") != std::string::npos);
  // vertices at level -12 sit at k/12 of the drawing span (left margin 70, span 700)
  for (int k = 0; k <= 12; ++k) {
    std::ostringstream cx;
    cx << std::fixed;
    cx.precision(2);
    cx << "cx=\"" << 70 + 700.0 * k / 12 << "\"";
    CHECK(r.out.find(cx.str()) != std::string::npos);
  }
  CHECK(run({"embed", "--graph", "euler", "--depth", "12"}).code == 0);
  CHECK(run({"embed", "--graph", "multipascal", "--d", "3"}).code == 2);
}

TEST_CASE("eulerian rows and identity check") {
  CHECK(run({"eulerian", "--n", "3"}).out == "1 4 1\n");
  CHECK(run({"eulerian", "--n", "1"}).out == "1\n");
  auto r = run({"eulerian", "--check", "--depth", "12"});
  CHECK(r.code == 0);
  CHECK(r.out.find(": ok") != std::string::npos);
  CHECK(run({"eulerian"}).code == 2);
}
