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

#include <limits>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rp/error.hpp"
#include "rp/network.hpp"

using namespace rp;

namespace {

Errc rejection(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& xi, double cost = 0.6) {
  try {
    (void)TrafficNetwork::validate(theta, xi, cost);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("network was accepted");
  return Errc::kUsage;
}

Eigen::MatrixXd ones(int n) { return Eigen::MatrixXd::Ones(n, n); }

}  // namespace

TEST_CASE("three-location cycle is a valid network with three arcs") {
  const TrafficNetwork net = fixtures::make_network(3, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 0, 1, 1}});
  CHECK(net.arc_count() == 3);
  CHECK(net.size() == 3);
  CHECK(net.arc(0) == Arc{0, 1});
  CHECK(net.arc_index(2, 0) == 2u);
  CHECK_FALSE(net.arc_index(0, 2).has_value());
}

TEST_CASE("validation names the violated invariant") {
  SUBCASE("two disjoint 2-cycles") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(4, 4);
    theta(0, 1) = theta(1, 0) = theta(2, 3) = theta(3, 2) = 1.0;
    CHECK(rejection(theta, ones(4)) == Errc::kDisconnected);
  }
  SUBCASE("self loop") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 1) = 1.0;
    theta(0, 0) = 0.5;
    CHECK(rejection(theta, ones(2)) == Errc::kSelfLoopDemand);
  }
  SUBCASE("negative demand") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 1) = 1.0;
    theta(1, 0) = -0.1;
    CHECK(rejection(theta, ones(2)) == Errc::kNegativeDemand);
  }
  SUBCASE("non-finite demand") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK(rejection(theta, ones(2)) == Errc::kNegativeDemand);
  }
  SUBCASE("zero travel time on an arc") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 1) = 1.0;
    Eigen::MatrixXd xi = ones(2);
    xi(0, 1) = 0.0;
    CHECK(rejection(theta, xi) == Errc::kNonPositiveTravelTimeOnArc);
  }
  SUBCASE("travel time off the arc set is ignored") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 1) = 1.0;
    Eigen::MatrixXd xi = ones(2);
    xi(1, 0) = -5.0;
    CHECK_NOTHROW((void)TrafficNetwork::validate(theta, xi, 0.6));
  }
  SUBCASE("cost outside [0, 1)") {
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 2);
    theta(0, 1) = 1.0;
    CHECK(rejection(theta, ones(2), 1.0) == Errc::kCostOutOfRange);
    CHECK(rejection(theta, ones(2), -0.1) == Errc::kCostOutOfRange);
  }
  SUBCASE("size mismatch and single location") {
    CHECK(rejection(Eigen::MatrixXd::Zero(2, 2), ones(3)) == Errc::kDimensionMismatch);
    CHECK(rejection(Eigen::MatrixXd::Zero(1, 1), ones(1)) == Errc::kDimensionMismatch);
  }
}

TEST_CASE("ad revenue vectors are aligned with arcs and non-negative") {
  const TrafficNetwork net = fixtures::make_network(3, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 0, 1, 1}});
  CHECK(AdRevenueVector::zeros(net).size() == 3);
  CHECK_THROWS_AS(AdRevenueVector::from_values(net, Eigen::VectorXd::Zero(2)), Error);
  CHECK_THROWS_AS(AdRevenueVector::from_values(net, Eigen::VectorXd::Constant(3, -0.1)), Error);
  CHECK_THROWS_AS(AdRevenueVector::zeros(net).with(1, -1.0), Error);
  CHECK(AdRevenueVector::zeros(net).with(1, 0.5)[1] == 0.5);
}

TEST_CASE("undirected projection sums theta / xi over both directions") {
  SUBCASE("three-location example") {
    // Arcs (1,2), (2,1), (1,3), (3,2) in one-based labels.
    const TrafficNetwork net =
        fixtures::make_network(3, {{0, 1, 2.0, 4.0}, {1, 0, 3.0, 2.0}, {0, 2, 1.0, 0.5}, {2, 1, 5.0, 2.5}});
    const UndirectedGraph g = undirected_projection(net);
    CHECK(g.edges().size() == 3);
    CHECK(g.weight(0, 1) == doctest::Approx(2.0 / 4.0 + 3.0 / 2.0));
    CHECK(g.weight(0, 2) == doctest::Approx(1.0 / 0.5));
    CHECK(g.weight(1, 2) == doctest::Approx(5.0 / 2.5));
  }
  SUBCASE("one-directional arc") {
    const TrafficNetwork net = fixtures::make_network(2, {{0, 1, 2.0, 4.0}});
    CHECK(undirected_projection(net).weight(0, 1) == doctest::Approx(0.5));
  }
  SUBCASE("symmetric unit pair") {
    const TrafficNetwork net = fixtures::make_symmetric(2, {{0, 1}});
    CHECK(undirected_projection(net).weight(0, 1) == doctest::Approx(2.0));
  }
}

TEST_CASE("projection weights are symmetric, positive, and invariant to swapping equal-time directions") {
  std::mt19937_64 rng(1);
  oracle::RandomSpec spec;
  spec.max_nodes = 8;
  spec.max_arcs = 20;
  for (int t = 0; t < 50; ++t) {
    const auto inst = oracle::random_instance(rng, spec);
    const UndirectedGraph g = undirected_projection(inst.net);
    for (const WeightedEdge& e : g.edges()) {
      CHECK(e.weight > 0.0);
      CHECK(g.weight(e.u, e.v) == g.weight(e.v, e.u));
    }
    // Swap theta_xy and theta_yx with xi forced symmetric.
    Eigen::MatrixXd theta = inst.net.demand();
    Eigen::MatrixXd xi = inst.net.travel_time();
    for (int i = 0; i < inst.net.size(); ++i) {
      for (int j = 0; j < i; ++j) xi(i, j) = xi(j, i) = 1.0 + 0.1 * (i + j);
    }
    const TrafficNetwork before = TrafficNetwork::validate(theta, xi, 0.5);
    const TrafficNetwork after = TrafficNetwork::validate(theta.transpose(), xi, 0.5);
    const UndirectedGraph a = undirected_projection(before), b = undirected_projection(after);
    for (int i = 0; i < inst.net.size(); ++i) {
      for (int j = 0; j < inst.net.size(); ++j) CHECK(a.weight(i, j) == doctest::Approx(b.weight(i, j)).epsilon(1e-15));
    }
  }
}

TEST_CASE("masked projection drops arcs and may disconnect") {
  const TrafficNetwork net = fixtures::make_network(3, {{0, 1, 1, 1}, {1, 2, 1, 1}, {2, 0, 1, 1}});
  ArcMask mask{true, false, false};
  const UndirectedGraph g = undirected_projection(net, mask);
  CHECK(g.component_count() == 2);
  CHECK(g.component_labels() == std::vector<int>{0, 0, 1});
}

TEST_CASE("cut vertices are articulation points of the projection") {
  SUBCASE("two triangles sharing a vertex") {
    const TrafficNetwork net = fixtures::make_symmetric(5, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {4, 2}});
    CHECK(find_cut_vertices(net) == std::vector<int>{2});
  }
  SUBCASE("complete graph on four locations") {
    CHECK(find_cut_vertices(fixtures::complete_symmetric(4)).empty());
  }
  SUBCASE("path") {
    const TrafficNetwork net = fixtures::make_network(3, {{0, 1, 1, 1}, {2, 1, 1, 1}});
    CHECK(find_cut_vertices(net) == std::vector<int>{1});
  }
  SUBCASE("brute force on random networks") {
    std::mt19937_64 rng(5);
    oracle::RandomSpec spec;
    spec.max_nodes = 9;
    spec.max_arcs = 14;
    for (int t = 0; t < 60; ++t) {
      const auto inst = oracle::random_instance(rng, spec);
      const UndirectedGraph g = undirected_projection(inst.net);
      std::vector<int> expected;
      for (int removed = 0; removed < g.size(); ++removed) {
        std::vector<WeightedEdge> rest;
        for (const WeightedEdge& e : g.edges()) {
          if (e.u != removed && e.v != removed) rest.push_back(e);
        }
        // The removed vertex stays as an isolated component; discount it.
        if (UndirectedGraph(g.size(), rest).component_count() > 2) expected.push_back(removed);
      }
      CHECK(find_cut_vertices(inst.net) == expected);
    }
  }
}

TEST_CASE("symmetric-demand detection") {
  CHECK(fixtures::make_symmetric(3, {{0, 1}, {1, 2}}).has_symmetric_demand());
  CHECK_FALSE(fixtures::make_network(2, {{0, 1, 1, 1}, {1, 0, 2, 1}}).has_symmetric_demand());
}
