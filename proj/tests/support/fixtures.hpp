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


#pragma once

// Small fixed networks shared by the test suites.

#include <initializer_list>
#include <tuple>

#include <Eigen/Dense>

#include "rp/network.hpp"

namespace rp::fixtures {

struct ArcSpec {
  int from;
  int to;
  double demand;
  double travel_time;
};

inline TrafficNetwork make_network(int n, std::initializer_list<ArcSpec> arcs, double cost = 0.6) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(n, n);
  for (const ArcSpec& a : arcs) {
    theta(a.from, a.to) = a.demand;
    xi(a.from, a.to) = a.travel_time;
  }
  return TrafficNetwork::validate(theta, xi, cost);
}

// Bidirectional arcs with equal demand and travel time on every listed edge.
inline TrafficNetwork make_symmetric(int n, std::initializer_list<std::pair<int, int>> edges, double demand = 1.0,
                                     double travel_time = 1.0, double cost = 0.6) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(n, n);
  for (auto [i, j] : edges) {
    theta(i, j) = theta(j, i) = demand;
    xi(i, j) = xi(j, i) = travel_time;
  }
  return TrafficNetwork::validate(theta, xi, cost);
}

// Six-location ring 0-1-2-3-4-5-0 with chord 1-4, bidirectional unit arcs.
// In one-based labels this is the ring 1..6 with chord (2,5).
inline TrafficNetwork ring_with_chord(double cost = 0.6) {
  return make_symmetric(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {1, 4}}, 1.0, 1.0, cost);
}

inline TrafficNetwork complete_symmetric(int n, double demand = 1.0, double travel_time = 1.0) {
  Eigen::MatrixXd theta = Eigen::MatrixXd::Constant(n, n, demand);
  theta.diagonal().setZero();
  Eigen::MatrixXd xi = Eigen::MatrixXd::Constant(n, n, travel_time);
  return TrafficNetwork::validate(theta, xi, 0.6);
}

}  // namespace rp::fixtures
