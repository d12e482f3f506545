// Copyright 2026 The resistive-pricing Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rp/error.hpp"
#include "rp/pricing.hpp"
#include "rp/selection.hpp"

using namespace rp;

namespace {

AdvertiserCatalog every_arc(const TrafficNetwork& net, double b) {
  AdvertiserCatalog catalog;
  for (const Arc& a : net.arcs()) catalog.arc_based.push_back({a.from, a.to, b});
  return catalog;
}

AdvertiserCatalog every_location(const TrafficNetwork& net, double d) {
  AdvertiserCatalog catalog;
  for (int k = 0; k < net.size(); ++k) {
    LocationBid bid{k, {}};
    for (const Arc& a : net.arcs()) {
      if (a.to == k) bid.offers.push_back({a.from, d});
    }
    if (!bid.offers.empty()) catalog.location_based.push_back(bid);
  }
  return catalog;
}

AdvertiserCatalog random_catalog(std::mt19937_64& rng, const TrafficNetwork& net) {
  std::exponential_distribution<double> willingness(1.0 / 0.4);
  AdvertiserCatalog catalog;
  for (const Arc& a : net.arcs()) catalog.arc_based.push_back({a.from, a.to, willingness(rng)});
  for (int k = 0; k < net.size(); ++k) {
    LocationBid bid{k, {}};
    for (const Arc& a : net.arcs()) {
      if (a.to == k) bid.offers.push_back({a.from, willingness(rng)});
    }
    if (!bid.offers.empty()) catalog.location_based.push_back(bid);
  }
  return catalog;
}

// Unit resistance per edge: theta = 1, xi = 2 in both directions.
TrafficNetwork unit_graph(int n, std::initializer_list<std::pair<int, int>> edges) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(n, n);
  for (auto [i, j] : edges) {
    theta(i, j) = theta(j, i) = 1.0;
    xi(i, j) = xi(j, i) = 2.0;
  }
  return TrafficNetwork::validate(theta, xi, 0.6);
}

}  // namespace

TEST_CASE("delta") {
  SUBCASE("symmetric network without ads") {
    const TrafficNetwork net = fixtures::make_symmetric(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}, 2.0, 1.5, 0.6);
    const double per_arc = 2.0 * 1.5 * 0.2 * 0.2;
    CHECK(delta(net, AdRevenueVector::zeros(net)) == doctest::Approx(10 * per_arc).epsilon(1e-12));
  }
  SUBCASE("equals the payoff with an empty active set and bounds it otherwise") {
    std::mt19937_64 rng(61);
    int uncapped = 0, capped = 0;
    for (int t = 0; t < 300; ++t) {
      oracle::RandomSpec spec;
      spec.ad_max = 1.5;
      const auto inst = oracle::random_instance(rng, spec);
      const PricingSolution sol = solve_general(inst.net, inst.ads);
      const double d = delta(inst.net, inst.ads);
      if (sol.active_set.empty()) {
        CHECK(d == doctest::Approx(sol.payoff).epsilon(1e-8));
        ++uncapped;
      } else {
        CHECK(d >= sol.payoff - 1e-12);
        if (sol.mu.maxCoeff() > 1e-6) {
          CHECK(d > sol.payoff);
          ++capped;
        }
      }
    }
    CHECK(uncapped > 20);
    CHECK(capped > 20);
  }
}

TEST_CASE("closed-form scores agree with the change in delta") {
  std::mt19937_64 rng(67);
  oracle::RandomSpec spec;
  spec.symmetric = true;
  spec.max_nodes = 7;
  spec.max_arcs = 20;
  for (int t = 0; t < 40; ++t) {
    const auto inst = oracle::random_instance(rng, spec);
    const ElectricalNetwork e = build_electrical(inst.net);
    const AdvertiserCatalog catalog = random_catalog(rng, inst.net);
    const double base = delta(inst.net, AdRevenueVector::zeros(inst.net));
    const auto arcs = arc_candidates(inst.net, catalog);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const Arc a = *arcs[i].arc;
      const double b = arcs[i].ads[*inst.net.arc_index(a.from, a.to)];
      CHECK(arc_score(inst.net, e, a, b) / 4.0 == doctest::Approx(delta(inst.net, arcs[i].ads) - base).epsilon(1e-9));
      // Strictly increasing in b.
      CHECK(arc_score(inst.net, e, a, b + 1e-6) > arc_score(inst.net, e, a, b));
    }
    const auto locations = location_candidates(inst.net, catalog);
    for (const LocationBid& bid : catalog.location_based) {
      const auto it = std::find_if(locations.begin(), locations.end(),
                                   [&](const Candidate& c) { return c.location == bid.location; });
      REQUIRE(it != locations.end());
      CHECK(location_score(inst.net, e, bid) / 4.0 == doctest::Approx(delta(inst.net, it->ads) - base).epsilon(1e-9));
    }
  }
}

TEST_CASE("arc-based selection") {
  SUBCASE("ring with chord picks the chord") {
    const TrafficNetwork net = fixtures::ring_with_chord();
    const SelectionResult r = select_arc_advertiser(net, every_arc(net, 0.3));
    CHECK(r.closed_form_score);
    REQUIRE(r.choice().arc);
    CHECK(r.choice().arc->from == 1);
    CHECK(r.choice().arc->to == 4);
    CHECK(r.choice().label == "(1,4)");
    CHECK(r.general_solves == 1);
    // The induced ad vector is zero outside the chosen arc.
    const std::size_t k = *net.arc_index(1, 4);
    for (std::size_t j = 0; j < net.arc_count(); ++j) CHECK(r.choice().ads[j] == (j == k ? 0.3 : 0.0));
    CHECK(r.payoff == doctest::Approx(solve_general(net, r.choice().ads).payoff));
  }
  SUBCASE("a homogeneous path ties on every edge") {
    // Every tree edge has R equal to its own resistance.
    const TrafficNetwork net = fixtures::make_symmetric(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    const SelectionResult r = select_arc_advertiser(net, every_arc(net, 0.2));
    for (const CandidateScore& s : r.scores) CHECK(s.score == doctest::Approx(r.scores.front().score).epsilon(1e-12));
    CHECK(r.choice().arc->from == 0);
    CHECK(r.choice().arc->to == 1);
  }
  SUBCASE("ties go to the smallest arc regardless of catalog order") {
    const TrafficNetwork net = fixtures::complete_symmetric(3);
    AdvertiserCatalog catalog;
    catalog.arc_based = {{2, 1, 0.2}, {1, 2, 0.2}, {2, 0, 0.2}};
    CHECK(select_arc_advertiser(net, catalog).choice().label == "(1,2)");
  }
  SUBCASE("asymmetric demand falls back to delta") {
    const TrafficNetwork net = fixtures::make_network(3, {{0, 1, 2, 1}, {1, 2, 1, 1}, {2, 0, 1, 1}, {1, 0, 1, 1}});
    const AdvertiserCatalog catalog = every_arc(net, 0.2);
    const SelectionResult r = select_arc_advertiser(net, catalog);
    CHECK_FALSE(r.closed_form_score);
    for (const CandidateScore& s : r.scores) {
      CHECK(s.score == doctest::Approx(delta(net, r.candidates[s.candidate].ads)).epsilon(1e-12));
    }
  }
}

TEST_CASE("location-based selection") {
  SUBCASE("star centre wins") {
    const TrafficNetwork star = fixtures::make_symmetric(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}}, 1.0, 1.0);
    const SelectionResult r = select_location_advertiser(star, every_location(star, 0.3));
    CHECK(r.choice().location == 0);
    // theta = xi = 1, r = 1/2, c = 0.6, d = 0.3. Leaf pairs add nothing
    // (R_st = R_sk + R_tk), so each in-arc gives theta xi (d^2 + 2(1-c)d) - theta^2 d^2 r.
    const double per_arc = (0.09 + 2 * 0.4 * 0.3) - 0.09 * 0.5;
    CHECK(r.scores[0].score == doctest::Approx(5 * per_arc).epsilon(1e-12));
    CHECK(r.scores[1].score == doctest::Approx(per_arc).epsilon(1e-12));
  }
  SUBCASE("the only location with incoming arcs wins") {
    const TrafficNetwork net = fixtures::make_symmetric(4, {{0, 1}, {1, 2}, {2, 3}});
    AdvertiserCatalog catalog;
    catalog.location_based = {{2, {{1, 0.3}, {3, 0.3}}}, {0, {}}, {1, {}}};
    CHECK(select_location_advertiser(net, catalog).choice().location == 2);
  }
  SUBCASE("a cut vertex beats adjacent in-neighbours with the same R to k") {
    // Both networks: in-arcs 1->0 and 2->0 with R = 2/3. With 0 a cut vertex
    // R_12 = 4/3; with 1-2 an edge R_12 = 2/3.
    const TrafficNetwork cut = unit_graph(6, {{0, 1}, {1, 3}, {3, 0}, {0, 2}, {2, 4}, {4, 0}, {3, 5}});
    const TrafficNetwork adjacent = unit_graph(6, {{0, 1}, {0, 2}, {1, 2}, {0, 3}, {3, 4}, {4, 5}});
    const LocationBid bid{0, {{1, 0.3}, {2, 0.3}}};
    const ElectricalNetwork ec = build_electrical(cut);
    const ElectricalNetwork ea = build_electrical(adjacent);
    CHECK(ec.effective_resistance(1, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(ea.effective_resistance(1, 0) == doctest::Approx(2.0 / 3.0));
    // 2 theta xi (d^2 + 2(1-c)d) + 1/2 theta^2 d^2 sum_st (R_st - R_s0 - R_t0).
    const double linear = 2 * 2.0 * (0.09 + 0.24);
    const double cut_score = linear + 0.5 * 0.09 * (2 * (-4.0 / 3.0) + 2 * 0.0);
    const double adjacent_score = linear + 0.5 * 0.09 * (2 * (-4.0 / 3.0) + 2 * (2.0 / 3.0 - 4.0 / 3.0));
    CHECK(location_score(cut, ec, bid) == doctest::Approx(cut_score).epsilon(1e-12));
    CHECK(location_score(adjacent, ea, bid) == doctest::Approx(adjacent_score).epsilon(1e-12));
    CHECK(cut_score > adjacent_score);
  }
  SUBCASE("a single offer scores like the arc") {
    const TrafficNetwork net = fixtures::ring_with_chord();
    const ElectricalNetwork e = build_electrical(net);
    CHECK(location_score(net, e, {4, {{1, 0.25}}}) == doctest::Approx(arc_score(net, e, {1, 4}, 0.25)).epsilon(1e-12));
  }
}

TEST_CASE("reduced search matches exhaustive search") {
  std::mt19937_64 rng(71);
  oracle::RandomSpec spec;
  spec.min_nodes = 3;
  spec.max_nodes = 5;
  spec.max_arcs = 10;
  spec.ad_max = 0.0;
  int deep = 0;
  for (int t = 0; t < 60; ++t) {
    const auto inst = oracle::random_instance(rng, spec);
    AdvertiserCatalog catalog = random_catalog(rng, inst.net);
    // Large willingness makes price caps bind for some candidates.
    for (ArcBid& b : catalog.arc_based) b.willingness *= 3.0;
    for (AdvertiserMode mode : {AdvertiserMode::kArc, AdvertiserMode::kLocation}) {
      const auto candidates = candidates_for(inst.net, catalog, mode);
      if (candidates.empty()) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (const Candidate& c : candidates) {
        best = std::max(best, oracle::enumerate_active_sets(inst.net, c.ads).payoff);
      }
      const SelectionResult r = reduced_search(inst.net, candidates);
      CHECK(r.payoff == doctest::Approx(best).epsilon(1e-9));
      CHECK(r.general_solves == r.search_depth);
      if (r.search_depth > 1) ++deep;
    }
  }
  CHECK(deep > 5);
}

TEST_CASE("reduced search edge cases") {
  const TrafficNetwork net = fixtures::ring_with_chord();
  SUBCASE("all candidates uncapped: one solve") {
    const auto candidates = arc_candidates(net, every_arc(net, 0.1));
    const SelectionResult r = reduced_search(net, candidates);
    CHECK(r.search_depth == 1);
    CHECK(r.general_solves == 1);
    CHECK(r.choice().label == "(1,4)");
  }
  SUBCASE("single candidate") {
    AdvertiserCatalog catalog;
    catalog.arc_based = {{2, 3, 0.4}};
    const SelectionResult r = reduced_search(net, arc_candidates(net, catalog));
    CHECK(r.chosen == 0);
    CHECK(r.payoff == doctest::Approx(solve_general(net, r.choice().ads).payoff));
  }
  SUBCASE("no candidates") { CHECK_THROWS_AS(reduced_search(net, {}), Error); }
}

TEST_CASE("strategy comparison") {
  std::mt19937_64 rng(73);
  oracle::RandomSpec spec;
  spec.min_nodes = 5;
  spec.max_nodes = 7;
  spec.max_arcs = 18;
  spec.ad_max = 0.0;
  const auto inst = oracle::random_instance(rng, spec);
  const AdvertiserCatalog catalog = random_catalog(rng, inst.net);

  CompareOptions options;
  options.mode = AdvertiserMode::kArc;
  options.seed = 11;
  const StrategyComparison a = strategy_compare(inst.net, catalog, options);
  const StrategyComparison b = strategy_compare(inst.net, catalog, options);
  CHECK(a.row(Strategy::kRandom).payoff == b.row(Strategy::kRandom).payoff);
  REQUIRE(a.rows.size() == 3);
  CHECK(a.rows[0].strategy == Strategy::kResistance);
  CHECK(a.rows[1].strategy == Strategy::kOptimal);
  CHECK(a.rows[2].strategy == Strategy::kRandom);

  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    const double p = solve_general(inst.net, a.candidates[i].ads).payoff;
    CHECK(a.candidate_payoffs[i] == doctest::Approx(p).epsilon(1e-12));
    best = std::max(best, p);
  }
  CHECK(a.row(Strategy::kOptimal).payoff == doctest::Approx(best).epsilon(1e-12));
  CHECK(a.row(Strategy::kRandom).payoff <= best + 1e-12);
  const StrategyRow& res = a.row(Strategy::kResistance);
  CHECK(res.gap_to_optimal == doctest::Approx((best - res.payoff) / std::abs(best)).epsilon(1e-12));
  CHECK(res.gap_to_optimal >= 0.0);

  // Average of the seeded draws, recomputed here.
  std::mt19937_64 draws(11);
  std::uniform_int_distribution<std::size_t> pick(0, a.candidates.size() - 1);
  double total = 0.0;
  for (int t = 0; t < options.random_trials; ++t) total += a.candidate_payoffs[pick(draws)];
  CHECK(a.row(Strategy::kRandom).payoff == doctest::Approx(total / options.random_trials).epsilon(1e-12));

  options.seed = 12;
  CHECK(strategy_compare(inst.net, catalog, options).row(Strategy::kRandom).payoff !=
        a.row(Strategy::kRandom).payoff);

  SUBCASE("uncapped candidates: resistance-based choice is optimal") {
    const TrafficNetwork ring = fixtures::ring_with_chord();
    CompareOptions o;
    o.mode = AdvertiserMode::kArc;
    const StrategyComparison c = strategy_compare(ring, every_arc(ring, 0.1), o);
    CHECK(c.row(Strategy::kResistance).gap_to_optimal == doctest::Approx(0.0));
  }
  SUBCASE("extended model") {
    options.model = PricingModel::kExtended;
    options.mode = AdvertiserMode::kLocation;
    options.extended.psi = 5.0;
    const StrategyComparison c = strategy_compare(inst.net, catalog, options);
    for (std::size_t i = 0; i < c.candidates.size(); ++i) {
      CHECK(c.candidate_payoffs[i] ==
            doctest::Approx(solve_extended(inst.net, c.candidates[i].ads, options.extended).payoff).epsilon(1e-12));
    }
    CHECK(c.row(Strategy::kOptimal).payoff >= c.row(Strategy::kResistance).payoff);
  }
  SUBCASE("invalid options") {
    options.random_trials = 0;
    CHECK_THROWS_WITH_AS(strategy_compare(inst.net, catalog, options), doctest::Contains("Usage"), Error);
  }
}

TEST_CASE("catalog validation") {
  const TrafficNetwork net = fixtures::make_symmetric(3, {{0, 1}, {1, 2}});
  AdvertiserCatalog c;
  c.arc_based = {{0, 2, 0.1}};
  CHECK_THROWS_WITH_AS(c.validate(net), doctest::Contains("not an arc"), Error);
  c.arc_based = {{0, 1, -0.1}};
  CHECK_THROWS_AS(c.validate(net), Error);
  c.arc_based = {{0, 1, 0.1}, {0, 1, 0.2}};
  CHECK_THROWS_WITH_AS(c.validate(net), doctest::Contains("twice"), Error);
  c.arc_based = {{0, 1, 0.1}};
  c.location_based = {{1, {{2, 0.1}, {0, 0.3}}}};
  CHECK_NOTHROW(c.validate(net));
  c.location_based = {{2, {{0, 0.1}}}};
  CHECK_THROWS_AS(c.validate(net), Error);
  c.location_based = {{7, {}}};
  CHECK_THROWS_AS(c.validate(net), Error);
}
