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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rp {

// Directed origin-destination pair with positive demand.
struct Arc {
  int from = 0;
  int to = 0;

  friend bool operator==(const Arc&, const Arc&) = default;
  friend auto operator<=>(const Arc&, const Arc&) = default;
};

// Pair along which empty vehicles may be routed in the extended model.
struct EmptyRoute {
  int from = 0;
  int to = 0;
  double travel_time = 0.0;
};

// Per-arc keep flags; `false` removes the arc from the electrical analogue.
using ArcMask = std::vector<bool>;

/*
  TrafficNetwork: immutable, validated directed demand graph.

  Arcs are the pairs with positive demand, stored in lexicographic (from, to)
  order; every per-arc vector in the library is indexed by that order.
  Travel times off the arc set are never read.
*/
class TrafficNetwork {
 public:
  // Throws rp::Error naming the first violated invariant.
  static TrafficNetwork validate(const Eigen::MatrixXd& demand,
                                 const Eigen::MatrixXd& travel_time,
                                 double unit_cost,
                                 std::vector<EmptyRoute> extra_empty_routes = {});

  int size() const { return static_cast<int>(demand_.rows()); }
  double unit_cost() const { return unit_cost_; }
  const Eigen::MatrixXd& demand() const { return demand_; }
  const Eigen::MatrixXd& travel_time() const { return travel_time_; }

  std::span<const Arc> arcs() const { return arcs_; }
  std::size_t arc_count() const { return arcs_.size(); }
  const Arc& arc(std::size_t index) const { return arcs_[index]; }
  double arc_demand(std::size_t index) const;
  double arc_travel_time(std::size_t index) const;
  std::optional<std::size_t> arc_index(int from, int to) const;

  // Off-arc pairs with a user-supplied empty-vehicle travel time.
  std::span<const EmptyRoute> extra_empty_routes() const { return extra_empty_routes_; }

  // True when demand(i, j) == demand(j, i) for every pair.
  bool has_symmetric_demand(double tol = 0.0) const;

 private:
  TrafficNetwork() = default;

  Eigen::MatrixXd demand_;
  Eigen::MatrixXd travel_time_;
  double unit_cost_ = 0.0;
  std::vector<Arc> arcs_;
  std::vector<int> arc_lookup_;  // N*N, -1 when (i, j) is not an arc
  std::vector<EmptyRoute> extra_empty_routes_;
};

// Non-negative unit ad revenue per arc, aligned with TrafficNetwork::arcs().
class AdRevenueVector {
 public:
  static AdRevenueVector zeros(const TrafficNetwork& net);
  static AdRevenueVector from_values(const TrafficNetwork& net, Eigen::VectorXd values);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t arc_index) const { return values_[static_cast<Eigen::Index>(arc_index)]; }
  const Eigen::VectorXd& values() const { return values_; }

  // Copy with one entry replaced; the new value must stay non-negative.
  AdRevenueVector with(std::size_t arc_index, double value) const;

 private:
  explicit AdRevenueVector(Eigen::VectorXd values) : values_(std::move(values)) {}
  Eigen::VectorXd values_;
};

struct WeightedEdge {
  int u = 0;  // u < v
  int v = 0;
  double weight = 0.0;
};

// Undirected projection: edge {i, j} carries theta_ij/xi_ij + theta_ji/xi_ji.
class UndirectedGraph {
 public:
  UndirectedGraph(int n, std::vector<WeightedEdge> edges);

  int size() const { return n_; }
  std::span<const WeightedEdge> edges() const { return edges_; }
  std::span<const int> neighbors(int node) const { return adjacency_[static_cast<std::size_t>(node)]; }
  double weight(int i, int j) const;  // 0 when no edge

  // Connected component label per node, labels numbered in order of the
  // smallest node they contain.
  std::vector<int> component_labels() const;
  int component_count() const;

 private:
  int n_;
  std::vector<WeightedEdge> edges_;
  std::vector<std::vector<int>> adjacency_;
  Eigen::MatrixXd weights_;
};

UndirectedGraph undirected_projection(const TrafficNetwork& net);

// Projection of the network restricted to arcs whose mask entry is true.
UndirectedGraph undirected_projection(const TrafficNetwork& net, const ArcMask& mask);

// Articulation points of the undirected projection, ascending.
std::vector<int> find_cut_vertices(const TrafficNetwork& net);
std::vector<int> find_cut_vertices(const UndirectedGraph& graph);

}  // namespace rp
