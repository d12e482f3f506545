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

#include "rp/electrical.hpp"

#include <limits>

#include <fmt/core.h>

#include "rp/error.hpp"

namespace rp {

Eigen::MatrixXd laplacian_pseudoinverse(const Eigen::MatrixXd& laplacian) {
  const auto n = laplacian.rows();
  if (n == 1) return Eigen::MatrixXd::Zero(1, 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd bordered = laplacian + Eigen::MatrixXd::Constant(n, n, inv_n);
  Eigen::MatrixXd inv = bordered.llt().solve(Eigen::MatrixXd::Identity(n, n));
  inv.array() -= inv_n;
  // Symmetrize away round-off so R is exactly symmetric.
  return 0.5 * (inv + inv.transpose());
}

ElectricalNetwork::ElectricalNetwork(const UndirectedGraph& graph) {
  const int n = graph.size();
  component_of_ = graph.component_labels();
  local_index_.assign(static_cast<std::size_t>(n), -1);
  const int count = n == 0 ? 0 : *std::max_element(component_of_.begin(), component_of_.end()) + 1;
  components_.resize(static_cast<std::size_t>(count));
  for (int v = 0; v < n; ++v) {
    auto& comp = components_[static_cast<std::size_t>(component_of_[static_cast<std::size_t>(v)])];
    local_index_[static_cast<std::size_t>(v)] = comp.size();
    comp.nodes.push_back(v);
  }

  for (auto& comp : components_) {
    const int m = comp.size();
    comp.laplacian = Eigen::MatrixXd::Zero(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        const double w = graph.weight(comp.nodes[static_cast<std::size_t>(a)], comp.nodes[static_cast<std::size_t>(b)]);
        if (w <= 0.0) continue;
        comp.laplacian(a, b) = comp.laplacian(b, a) = -w;
        comp.laplacian(a, a) += w;
        comp.laplacian(b, b) += w;
        comp.resistors.push_back({comp.nodes[static_cast<std::size_t>(a)], comp.nodes[static_cast<std::size_t>(b)], 1.0 / w});
      }
    }
    comp.pseudoinverse = laplacian_pseudoinverse(comp.laplacian);
    const Eigen::VectorXd d = comp.pseudoinverse.diagonal();
    comp.effective_resistance = (d.replicate(1, m) + d.transpose().replicate(m, 1) - 2.0 * comp.pseudoinverse);
    comp.effective_resistance.diagonal().setZero();
    comp.effective_resistance = 0.5 * (comp.effective_resistance + comp.effective_resistance.transpose()).eval();
  }
}

double ElectricalNetwork::effective_resistance(int i, int j) const {
  if (i == j) return 0.0;
  if (!connected(i, j)) {
    throw Error(Errc::kDifferentComponents, fmt::format("locations {} and {} are not connected", i, j));
  }
  const auto& comp = components_[static_cast<std::size_t>(component_of(i))];
  return comp.effective_resistance(local_index(i), local_index(j));
}

Eigen::MatrixXd ElectricalNetwork::resistance_matrix() const {
  const int n = size();
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
  for (const auto& comp : components_) {
    for (int a = 0; a < comp.size(); ++a) {
      for (int b = 0; b < comp.size(); ++b) {
        r(comp.nodes[static_cast<std::size_t>(a)], comp.nodes[static_cast<std::size_t>(b)]) = comp.effective_resistance(a, b);
      }
    }
  }
  return r;
}

ElectricalNetwork build_electrical(const TrafficNetwork& net, const std::optional<ArcMask>& mask) {
  return ElectricalNetwork(mask ? undirected_projection(net, *mask) : undirected_projection(net));
}

Eigen::VectorXd value_vector(const TrafficNetwork& net, const AdRevenueVector& ads,
                             const std::optional<ArcMask>& mask) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(net.size());
  const double c = net.unit_cost();
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    if (mask && !(*mask)[k]) continue;
    const Arc& a = net.arc(k);
    const double term = net.arc_demand(k) * (1.0 + ads[k] - c);
    v[a.from] += term;
    v[a.to] -= term;
  }
  return v;
}

Eigen::VectorXd resistance_potential_gap(const TrafficNetwork& net, const ElectricalNetwork& electrical,
                                         const Eigen::VectorXd& values) {
  // Per component, sum_k R_ik v_k over the component's own nodes.
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(net.size());
  for (const auto& comp : electrical.components()) {
    Eigen::VectorXd local_v(comp.size());
    for (int a = 0; a < comp.size(); ++a) local_v[a] = values[comp.nodes[static_cast<std::size_t>(a)]];
    const Eigen::VectorXd rv = comp.effective_resistance * local_v;
    for (int a = 0; a < comp.size(); ++a) weighted[comp.nodes[static_cast<std::size_t>(a)]] = rv[a];
  }
  Eigen::VectorXd gap = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.arc_count()));
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const Arc& a = net.arc(k);
    if (!electrical.connected(a.from, a.to)) continue;
    gap[static_cast<Eigen::Index>(k)] = weighted[a.to] - weighted[a.from];
  }
  return gap;
}

}  // namespace rp
