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

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rp/network.hpp"

namespace rp {

struct Resistor {
  int u = 0;  // global location ids, u < v
  int v = 0;
  double resistance = 0.0;
};

/*
  ElectricalModel: electrical analogue of one connected component of the
  (possibly masked) undirected projection.

  Matrices are indexed by local position; `nodes[local]` is the global
  location id. A single-node component has 1x1 zero matrices.
*/
struct ElectricalModel {
  std::vector<int> nodes;
  Eigen::MatrixXd laplacian;
  Eigen::MatrixXd pseudoinverse;
  Eigen::MatrixXd effective_resistance;
  std::vector<Resistor> resistors;

  int size() const { return static_cast<int>(nodes.size()); }
};

// All components of one projection plus global-to-local lookup.
class ElectricalNetwork {
 public:
  explicit ElectricalNetwork(const UndirectedGraph& graph);

  int size() const { return static_cast<int>(component_of_.size()); }
  const std::vector<ElectricalModel>& components() const { return components_; }
  int component_of(int location) const { return component_of_[static_cast<std::size_t>(location)]; }
  int local_index(int location) const { return local_index_[static_cast<std::size_t>(location)]; }
  bool connected(int i, int j) const { return component_of(i) == component_of(j); }

  // R_ij; throws Errc::kDifferentComponents when i and j are not connected.
  double effective_resistance(int i, int j) const;

  // Dense N x N matrix of R_ij; entries across components are +infinity.
  Eigen::MatrixXd resistance_matrix() const;

 private:
  std::vector<ElectricalModel> components_;
  std::vector<int> component_of_;
  std::vector<int> local_index_;
};

// Masked arcs are dropped (their demand counts as zero) before projecting.
ElectricalNetwork build_electrical(const TrafficNetwork& net, const std::optional<ArcMask>& mask = std::nullopt);

// Net outgoing (1 + a - c)-weighted demand per location, over kept arcs.
Eigen::VectorXd value_vector(const TrafficNetwork& net, const AdRevenueVector& ads,
                             const std::optional<ArcMask>& mask = std::nullopt);

// Laplacian pseudoinverse of a connected weighted graph via the bordered
// system (L + J/n)^-1 - J/n.
Eigen::MatrixXd laplacian_pseudoinverse(const Eigen::MatrixXd& laplacian);

// sum_k (R_jk - R_ik) v_k for each arc, or 0 when i and j are not connected.
// This is the network term of the closed-form price.
Eigen::VectorXd resistance_potential_gap(const TrafficNetwork& net, const ElectricalNetwork& electrical,
                                         const Eigen::VectorXd& values);

}  // namespace rp
