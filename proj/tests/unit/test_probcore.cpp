#include <random>

#include "doctest.h"
#include "filtra/probcore.hpp"
#include "helpers.hpp"

using namespace filtra;
using testing_support::q;

namespace {

SpacePtr line(int n) { return OrderedStateSpace::range(0, 0, n - 1); }

Dist<Rational> dist(const SpacePtr& s, std::vector<Rational> w) { return Dist<Rational>(s, std::move(w)); }

}  // namespace

TEST_CASE("make_dist normalizes exactly") {
  auto s2 = line(2);
  CHECK(make_dist<Rational>(s2, {q(1), q(1)}) == dist(s2, {q(1, 2), q(1, 2)}));
  CHECK(make_dist<Rational>(line(3), {q(0), q(0), q(3)}) == Dist<Rational>::point_mass(line(3), 2));
  CHECK(make_dist<Rational>(s2, {q(2), q(6)}) == dist(s2, {q(1, 4), q(3, 4)}));
  CHECK_THROWS_AS(make_dist<Rational>(s2, {q(-1), q(2)}), Error);
  CHECK_THROWS_AS(make_dist<Rational>(s2, {q(0), q(0)}), Error);
  CHECK_THROWS_AS(make_dist<Rational>(s2, {q(1)}), Error);
}

TEST_CASE("state spaces validate their states") {
  CHECK_THROWS_AS(OrderedStateSpace::total(0, {1, 1}), Error);
  CHECK_THROWS_AS(OrderedStateSpace::total(0, {2, 1}), Error);
  CHECK_THROWS_AS(OrderedStateSpace::coordinates(0, {{0, 1}, {1}}), Error);
  auto sq = OrderedStateSpace::coordinates(0, {{-1, -1}, {-1, 1}, {1, -1}, {1, 1}});
  CHECK(sq->leq(0, 3));
  CHECK_FALSE(sq->leq(1, 2));
  CHECK_FALSE(sq->leq(2, 1));
  CHECK(sq->label(1) == "(-1,1)");
}

TEST_CASE("cdf") {
  auto s2 = line(2);
  CHECK(cdf(Dist<Rational>::uniform(s2)) == std::vector<Rational>{q(1, 2), q(1)});
  CHECK(cdf(Dist<Rational>::point_mass(line(3), 2)) == std::vector<Rational>{q(0), q(0), q(1)});
  CHECK(cdf(dist(s2, {q(1, 4), q(3, 4)})) == std::vector<Rational>{q(1, 4), q(1)});
  auto sq = OrderedStateSpace::coordinates(0, {{0, 0}, {0, 1}});
  CHECK_THROWS_AS(cdf(Dist<Rational>::uniform(sq)), Error);
}

TEST_CASE("stochastic dominance") {
  auto s3 = line(3);
  CHECK(stochastically_dominates(Dist<Rational>::point_mass(s3, 1), Dist<Rational>::point_mass(s3, 0)));
  CHECK_FALSE(stochastically_dominates(Dist<Rational>::point_mass(s3, 0), Dist<Rational>::point_mass(s3, 1)));
  auto u = Dist<Rational>::uniform(s3);
  CHECK(stochastically_dominates(u, u));
  // Bin(2, 0.3) <=st Bin(2, 0.6)
  auto b3 = dist(s3, {q(49, 100), q(42, 100), q(9, 100)});
  auto b6 = dist(s3, {q(16, 100), q(48, 100), q(36, 100)});
  CHECK(stochastically_dominates(b6, b3));
  CHECK_FALSE(stochastically_dominates(b3, b6));
  CHECK_THROWS_AS(stochastically_dominates(b3, Dist<Rational>::uniform(line(2))), SpaceMismatch);
}

TEST_CASE("quantile coupling") {
  auto s2 = line(2);
  auto p = quantile_coupling(Dist<Rational>::point_mass(s2, 0), Dist<Rational>::point_mass(s2, 1));
  CHECK(p(0, 1) == 1);
  auto diag = quantile_coupling(Dist<Rational>::uniform(s2), Dist<Rational>::uniform(s2));
  CHECK(diag(0, 0) == q(1, 2));
  CHECK(diag(1, 1) == q(1, 2));
  CHECK(diag(0, 1) == 0);
  auto c = quantile_coupling(Dist<Rational>::uniform(s2), Dist<Rational>::point_mass(s2, 1));
  CHECK(c(0, 1) == q(1, 2));
  CHECK(c(1, 1) == q(1, 2));
  CHECK(plan_order_le(c.order()));
}

TEST_CASE("dominance matches the support of the quantile coupling") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> size(2, 10);
  for (int t = 0; t < 200; ++t) {
    auto s = line(size(gen));
    auto mu = testing_support::random_dist(gen, s, 3);
    auto nu = testing_support::random_dist(gen, s, 3);
    auto plan = quantile_coupling(mu, nu);
    CHECK(plan.row_margin() == mu);
    CHECK(plan.col_margin() == nu);
    CHECK(stochastically_dominates(nu, mu) == plan_order_le(plan.order()));
  }
}

TEST_CASE("gluing couplings") {
  auto s2 = line(2);
  auto u = Dist<Rational>::uniform(s2);
  auto d1 = Dist<Rational>::point_mass(s2, 1);

  auto diag = quantile_coupling(u, u);
  auto g = glue_couplings(diag, diag);
  CHECK(g.at(0, 0, 0) == q(1, 2));
  CHECK(g.at(1, 1, 1) == q(1, 2));
  CHECK(g.at(0, 1, 0) == 0);

  auto prod = CouplingPlan<Rational>::product(u, dist(s2, {q(1, 3), q(2, 3)}));
  auto prod2 = CouplingPlan<Rational>::product(dist(s2, {q(1, 3), q(2, 3)}), d1);
  auto gp = glue_couplings(prod, prod2);
  CHECK(gp.at(0, 1, 1) == q(1, 2) * q(2, 3));
  CHECK(gp.at(1, 0, 1) == q(1, 2) * q(1, 3));

  auto h = glue_couplings(quantile_coupling(u, d1), quantile_coupling(d1, u));
  CHECK(h.at(0, 1, 0) == q(1, 4));
  CHECK(h.at(0, 1, 1) == q(1, 4));
  CHECK(h.at(1, 1, 0) == q(1, 4));
  CHECK(h.at(1, 1, 1) == q(1, 4));
  CHECK(h.margin_ab().joint() == quantile_coupling(u, d1).joint());
  CHECK(h.margin_bc().joint() == quantile_coupling(d1, u).joint());

  CHECK_THROWS_AS(glue_couplings(quantile_coupling(u, d1), quantile_coupling(u, u)), Error);
}

TEST_CASE("gluing ordered couplings gives an ordered coupling") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 100; ++t) {
    auto s = line(5);
    auto laws = testing_support::ordered_triple(gen, s, 4);
    auto ab = quantile_coupling(laws[0], laws[1]);
    auto bc = quantile_coupling(laws[1], laws[2]);
    auto j = glue_couplings(ab, bc);
    CHECK(j.margin_ab().joint() == ab.joint());
    CHECK(j.margin_bc().joint() == bc.joint());
    REQUIRE(plan_order_le(ab.order()));
    REQUIRE(plan_order_le(bc.order()));
    CHECK(plan_order_le(j.margin_ac().order()));
    CHECK(stochastically_dominates(laws[2], laws[0]));
  }
}

TEST_CASE("total variation") {
  auto s2 = line(2);
  auto u = Dist<Rational>::uniform(s2);
  CHECK(total_variation(u, u) == 0);
  CHECK(total_variation(Dist<Rational>::point_mass(s2, 0), Dist<Rational>::point_mass(s2, 1)) == 1);
  CHECK(total_variation(dist(s2, {q(1, 4), q(3, 4)}), u) == q(1, 4));

  std::mt19937_64 gen(3);
  for (int t = 0; t < 100; ++t) {
    auto s = line(6);
    auto a = testing_support::random_dist(gen, s);
    auto b = testing_support::random_dist(gen, s);
    auto c = testing_support::random_dist(gen, s);
    CHECK(total_variation(a, b) == total_variation(b, a));
    CHECK(total_variation(a, c) <= total_variation(a, b) + total_variation(b, c));
  }
}

TEST_CASE("scalars refuse to mix modes") {
  auto e = Scalar::exact(q(1, 3));
  auto f = Scalar::floating(0.5);
  CHECK_THROWS_AS(e + f, ModeMismatch);
  CHECK_THROWS_AS((void)(f == f), ModeMismatch);
  CHECK(f.approx_equal(Scalar::floating(0.5 + 1e-14), 1e-12));
  CHECK((e + e) == Scalar::exact(q(2, 3)));
  CHECK(e.to_string() == "1/3");
  CHECK(parse_rational("0.125") == q(1, 8));
  CHECK(parse_rational(" 3/6 ") == q(1, 2));
  CHECK(parse_rational("1e-3") == q(1, 1000));
  CHECK(parse_rational("-2.5E1") == q(-25));
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("abc"), Error);
}
