#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bidlab/auction.hpp"

using namespace bidlab;

TEST_CASE("example 1, bidder 1") {
  const ValuationCurve v({6, 4, 3, 1, 1});
  const MUniformStrategy s({{5, 2}, {3, 3}});
  const CompetingBids c({4, 4, 2, 2}, 5);
  const RoundOutcome o = clear_auction(s, c, v);
  CHECK(o.x == 3);
  CHECK(o.p == 3.0);
  CHECK(o.V == 13.0);
  CHECK(o.P == 9.0);
  CHECK(roi_feasible(o, v));
}

TEST_CASE("example 1, bidder 2") {
  const ValuationCurve v({5, 3, 1, 1, 0});
  const MUniformStrategy s({{4, 2}, {2, 2}});
  const CompetingBids c({5, 5, 3, 3, 3}, 5);
  const RoundOutcome o = clear_auction(s, c, v);
  CHECK(o.x == 2);
  CHECK(o.p == 3.0);
  CHECK(o.V == 8.0);
  CHECK(o.P == 6.0);
}

TEST_CASE("fully outbid") {
  const ValuationCurve v({1, 0.5});
  const MUniformStrategy s({{0.8, 2}});
  const CompetingBids c({2, 2, 2}, 3);
  const RoundOutcome o = clear_auction(s, c, v);
  CHECK(o.x == 0);
  CHECK(o.p == 2.0);
  CHECK(o.V == 0.0);
  CHECK(o.P == 0.0);
  CHECK(roi_feasible(o, v));
  CHECK(per_unit_price(s, c) == 0.0);
}

TEST_CASE("missing competing bids are zero") {
  const CompetingBids c({0.3}, 3);
  CHECK(c.beta(1) == 0.0);
  CHECK(c.beta(2) == 0.0);
  CHECK(c.beta(3) == 0.3);
  const ValuationCurve v({1, 1, 1});
  const MUniformStrategy s({{0.5, 1}});
  // K-th highest of {0.5, 0.3, 0, 0} with K = 3
  CHECK(clear_auction(s, c, v).p == 0.0);
}

TEST_CASE("per-unit price cases") {
  const ValuationCurve v({1, 1, 1});
  SUBCASE("partially filled first pair pays its bid") {
    const MUniformStrategy s({{0.9, 2}});
    const CompetingBids c({0.95, 0.5}, 2);
    CHECK(allocation(s, c) == 1);
    CHECK(per_unit_price(s, c) == 0.9);
    CHECK(clear_auction(s, c, v).p == 0.9);
  }
  SUBCASE("fully filled pair pays the next competing threshold") {
    // K = 3, bidder (0.9, 1); combined profile 0.9, 0.7, 0.4, 0.2 -> third highest 0.4
    const MUniformStrategy s({{0.9, 1}});
    const CompetingBids c({0.7, 0.4, 0.2}, 3);
    CHECK(allocation(s, c) == 1);
    CHECK(c.beta(2) == 0.4);
    CHECK(per_unit_price(s, c) == 0.4);
    CHECK(clear_auction(s, c, v).p == 0.4);
  }
}

TEST_CASE("overbid loses RoI against close competition") {
  const ValuationCurve v({0.9, 0.5, 0.1});
  const MUniformStrategy s({{0.6, 3}});
  const RoundOutcome o = clear_auction(s, CompetingBids({0.59, 0.59, 0.59}, 3), v);
  CHECK(o.x == 3);
  CHECK(o.P == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(o.V == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_FALSE(roi_feasible(o, v));
}

TEST_CASE("feasibility over a history") {
  const ValuationCurve v({0.9, 0.5, 0.1});
  const MUniformStrategy s({{0.6, 3}});
  CHECK(feasible_over_history(s, {CompetingBids({0.61, 0.59, 0.59}, 3)}, v));
  CHECK_FALSE(feasible_over_history(s, {CompetingBids({0.61, 0.59, 0.59}, 3), CompetingBids({0.59, 0.59, 0.59}, 3)}, v));
  CHECK(feasible_over_history(MUniformStrategy({{0.1, 1}}), {CompetingBids({0.5, 0.5, 0.5}, 3)}, v));
}

TEST_CASE("tie policies") {
  const ValuationCurve v({1, 1});
  const MUniformStrategy s({{0.5, 2}});
  const CompetingBids c({0.5, 0.5}, 2);
  CHECK(allocation(s, c, TiePolicy::FavorBidder) == 2);
  CHECK(allocation(s, c, TiePolicy::LowerIndexWins) == 0);
}

TEST_CASE("valuation curve") {
  const ValuationCurve v({6, 4, 3, 1, 1});
  CHECK(v.w(2) == 5.0);
  CHECK(v.w(5) == 3.0);
  CHECK(v.prefix(3) == 13.0);
  CHECK_THROWS(ValuationCurve({1, 2}));
  CHECK_THROWS(ValuationCurve(std::vector<double>{}));
  CHECK_THROWS(ValuationCurve({0, 0}));
  const ValuationCurve g({2, 2}, 1.0);
  CHECK(g.v(1) == 1.0);
}

TEST_CASE("w_j never lets j * w_j exceed the prefix sum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    std::vector<double> vals(1 + k % 30);
    for (double& x : vals) x = u(rng);
    std::sort(vals.begin(), vals.end(), std::greater<double>());
    vals[0] = std::max(vals[0], 1e-3);
    const ValuationCurve c(vals);
    for (std::size_t j = 1; j <= c.M(); ++j) {
      CHECK(static_cast<double>(j) * c.w(j) <= c.prefix(j));
      if (j > 1) CHECK(c.w(j) <= c.w(j - 1));
    }
  }
}

TEST_CASE("allocation bounds and V, P identities") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 3000; ++k) {
    const int M = 1 + k % 8, K = 1 + (k / 8) % 9;
    std::vector<double> vals(M);
    for (double& x : vals) x = u(rng);
    std::sort(vals.begin(), vals.end(), std::greater<double>());
    vals[0] = std::max(vals[0], 1e-3);
    const ValuationCurve c(vals);
    std::vector<BidPair> pairs;
    int left = M;
    double b = u(rng) + 0.01;
    while (left > 0 && pairs.size() < 3) {
      const int q = 1 + static_cast<int>(u(rng) * left) % left;
      pairs.push_back({b, q});
      left -= q;
      b *= u(rng);
      if (b <= 0) break;
    }
    const MUniformStrategy s(pairs);
    std::vector<double> comp(K + 1);
    for (double& x : comp) x = u(rng);
    const CompetingBids cb(comp, K);
    const RoundOutcome o = clear_auction(s, cb, c);
    CHECK(o.x >= 0);
    CHECK(o.x <= std::min(s.demand(), K));
    CHECK(o.V == c.prefix(o.x));
    CHECK(o.P == (o.x > 0 ? o.p * o.x : 0.0));
    if (o.x > 0) CHECK(per_unit_price(s, cb) == o.p);
  }
}

TEST_CASE("strategy validation") {
  CHECK_THROWS(MUniformStrategy({{0.4, 1}, {0.5, 1}}));
  CHECK_THROWS(MUniformStrategy({{0.4, 0}}));
  CHECK_THROWS(MUniformStrategy({{0.4, 3}}, 2));
  CHECK_THROWS(CompetingBids({0.1}, 0));
  const MUniformStrategy s({{0.5, 2}, {0.25, 1}});
  CHECK(s.demand() == 3);
  CHECK(s.unit_bid(3) == 0.25);
  CHECK(s.Q(1) == 2);
}
