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

#include "rp/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <fmt/core.h>

#include "rp/error.hpp"

namespace rp {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kNegativeDemand: return "NegativeDemand";
    case Errc::kNonPositiveTravelTimeOnArc: return "NonPositiveTravelTimeOnArc";
    case Errc::kSelfLoopDemand: return "SelfLoopDemand";
    case Errc::kDisconnected: return "Disconnected";
    case Errc::kCostOutOfRange: return "CostOutOfRange";
    case Errc::kInvalidAdRevenue: return "InvalidAdRevenue";
    case Errc::kDifferentComponents: return "DifferentComponents";
    case Errc::kNoConvergence: return "NoConvergence";
    case Errc::kRegimeBoundary: return "RegimeBoundary";
    case Errc::kInfeasible: return "Infeasible";
    case Errc::kInfeasiblePoint: return "InfeasiblePoint";
    case Errc::kTooFewPoints: return "TooFewPoints";
    case Errc::kEmptyAfterAggregation: return "EmptyAfterAggregation";
    case Errc::kMalformedInput: return "MalformedInput";
    case Errc::kUsage: return "Usage";
  }
  return "Unknown";
}

TrafficNetwork TrafficNetwork::validate(const Eigen::MatrixXd& demand,
                                        const Eigen::MatrixXd& travel_time,
                                        double unit_cost,
                                        std::vector<EmptyRoute> extra_empty_routes) {
  const auto n = demand.rows();
  if (demand.cols() != n || travel_time.rows() != n || travel_time.cols() != n) {
    throw Error(Errc::kDimensionMismatch, "demand and travel_time must be square and of equal size");
  }
  if (n < 2) {
    throw Error(Errc::kDimensionMismatch, "a network needs at least two locations");
  }
  if (!std::isfinite(unit_cost) || unit_cost < 0.0 || unit_cost >= 1.0) {
    throw Error(Errc::kCostOutOfRange, fmt::format("unit cost {} is outside [0, 1)", unit_cost));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (demand(i, i) != 0.0) {
      throw Error(Errc::kSelfLoopDemand, fmt::format("demand({0},{0}) = {1} must be zero", i, demand(i, i)));
    }
  }

  TrafficNetwork net;
  net.demand_ = demand;
  net.travel_time_ = travel_time;
  net.unit_cost_ = unit_cost;
  net.arc_lookup_.assign(static_cast<std::size_t>(n * n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double theta = demand(i, j);
      if (!std::isfinite(theta) || theta < 0.0) {
        throw Error(Errc::kNegativeDemand, fmt::format("demand({},{}) = {}", i, j, theta));
      }
      if (theta == 0.0) continue;
      const double xi = travel_time(i, j);
      if (!std::isfinite(xi) || xi <= 0.0) {
        throw Error(Errc::kNonPositiveTravelTimeOnArc, fmt::format("travel_time({},{}) = {}", i, j, xi));
      }
      net.arc_lookup_[static_cast<std::size_t>(i * n + j)] = static_cast<int>(net.arcs_.size());
      net.arcs_.push_back({static_cast<int>(i), static_cast<int>(j)});
    }
  }

  if (undirected_projection(net).component_count() != 1) {
    throw Error(Errc::kDisconnected, "the directed demand graph is not weakly connected");
  }

  for (const auto& route : extra_empty_routes) {
    if (route.from < 0 || route.to < 0 || route.from >= n || route.to >= n || route.from == route.to) {
      throw Error(Errc::kDimensionMismatch, fmt::format("empty route ({},{}) is out of range", route.from, route.to));
    }
    if (!std::isfinite(route.travel_time) || route.travel_time <= 0.0) {
      throw Error(Errc::kNonPositiveTravelTimeOnArc,
                  fmt::format("empty route ({},{}) travel time {}", route.from, route.to, route.travel_time));
    }
    if (net.arc_index(route.from, route.to)) continue;  // arcs are always routable
    net.extra_empty_routes_.push_back(route);
  }
  std::sort(net.extra_empty_routes_.begin(), net.extra_empty_routes_.end(),
            [](const EmptyRoute& a, const EmptyRoute& b) {
              return std::tie(a.from, a.to) < std::tie(b.from, b.to);
            });
  net.extra_empty_routes_.erase(
      std::unique(net.extra_empty_routes_.begin(), net.extra_empty_routes_.end(),
                  [](const EmptyRoute& a, const EmptyRoute& b) { return a.from == b.from && a.to == b.to; }),
      net.extra_empty_routes_.end());
  return net;
}

double TrafficNetwork::arc_demand(std::size_t index) const {
  const Arc& a = arcs_[index];
  return demand_(a.from, a.to);
}

double TrafficNetwork::arc_travel_time(std::size_t index) const {
  const Arc& a = arcs_[index];
  return travel_time_(a.from, a.to);
}

std::optional<std::size_t> TrafficNetwork::arc_index(int from, int to) const {
  const int n = size();
  if (from < 0 || to < 0 || from >= n || to >= n) return std::nullopt;
  const int idx = arc_lookup_[static_cast<std::size_t>(from * n + to)];
  if (idx < 0) return std::nullopt;
  return static_cast<std::size_t>(idx);
}

bool TrafficNetwork::has_symmetric_demand(double tol) const {
  return (demand_ - demand_.transpose()).cwiseAbs().maxCoeff() <= tol;
}

AdRevenueVector AdRevenueVector::zeros(const TrafficNetwork& net) {
  return AdRevenueVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.arc_count())));
}

AdRevenueVector AdRevenueVector::from_values(const TrafficNetwork& net, Eigen::VectorXd values) {
  if (static_cast<std::size_t>(values.size()) != net.arc_count()) {
    throw Error(Errc::kDimensionMismatch,
                fmt::format("ad revenue vector has {} entries for {} arcs", values.size(), net.arc_count()));
  }
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k]) || values[k] < 0.0) {
      throw Error(Errc::kInvalidAdRevenue, fmt::format("ad revenue {} on arc #{}", values[k], k));
    }
  }
  return AdRevenueVector(std::move(values));
}

AdRevenueVector AdRevenueVector::with(std::size_t arc_index, double value) const {
  if (!std::isfinite(value) || value < 0.0) {
    throw Error(Errc::kInvalidAdRevenue, fmt::format("ad revenue {} on arc #{}", value, arc_index));
  }
  Eigen::VectorXd copy = values_;
  copy[static_cast<Eigen::Index>(arc_index)] = value;
  return AdRevenueVector(std::move(copy));
}

UndirectedGraph::UndirectedGraph(int n, std::vector<WeightedEdge> edges)
    : n_(n), edges_(std::move(edges)), adjacency_(static_cast<std::size_t>(n)),
      weights_(Eigen::MatrixXd::Zero(n, n)) {
  for (const auto& e : edges_) {
    adjacency_[static_cast<std::size_t>(e.u)].push_back(e.v);
    adjacency_[static_cast<std::size_t>(e.v)].push_back(e.u);
    weights_(e.u, e.v) = e.weight;
    weights_(e.v, e.u) = e.weight;
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

double UndirectedGraph::weight(int i, int j) const { return weights_(i, j); }

std::vector<int> UndirectedGraph::component_labels() const {
  std::vector<int> label(static_cast<std::size_t>(n_), -1);
  std::vector<int> stack;
  int next = 0;
  for (int s = 0; s < n_; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int w : neighbors(u)) {
        if (label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

int UndirectedGraph::component_count() const {
  const auto labels = component_labels();
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

UndirectedGraph undirected_projection(const TrafficNetwork& net) {
  return undirected_projection(net, ArcMask(net.arc_count(), true));
}

UndirectedGraph undirected_projection(const TrafficNetwork& net, const ArcMask& mask) {
  const int n = net.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    if (!mask[k]) continue;
    const Arc& a = net.arc(k);
    const double term = net.arc_demand(k) / net.arc_travel_time(k);
    w(std::min(a.from, a.to), std::max(a.from, a.to)) += term;
  }
  std::vector<WeightedEdge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (w(i, j) > 0.0) edges.push_back({i, j, w(i, j)});
    }
  }
  return UndirectedGraph(n, std::move(edges));
}

std::vector<int> find_cut_vertices(const TrafficNetwork& net) {
  return find_cut_vertices(undirected_projection(net));
}

std::vector<int> find_cut_vertices(const UndirectedGraph& graph) {
  const int n = graph.size();
  std::vector<int> disc(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<bool> is_cut(static_cast<std::size_t>(n), false);
  int timer = 0;

  std::function<void(int, int)> dfs = [&](int u, int parent) {
    disc[static_cast<std::size_t>(u)] = low[static_cast<std::size_t>(u)] = timer++;
    int children = 0;
    for (int w : graph.neighbors(u)) {
      if (w == parent) continue;
      if (disc[static_cast<std::size_t>(w)] >= 0) {
        low[static_cast<std::size_t>(u)] = std::min(low[static_cast<std::size_t>(u)], disc[static_cast<std::size_t>(w)]);
        continue;
      }
      ++children;
      dfs(w, u);
      low[static_cast<std::size_t>(u)] = std::min(low[static_cast<std::size_t>(u)], low[static_cast<std::size_t>(w)]);
      if (parent >= 0 && low[static_cast<std::size_t>(w)] >= disc[static_cast<std::size_t>(u)]) {
        is_cut[static_cast<std::size_t>(u)] = true;
      }
    }
    if (parent < 0 && children > 1) is_cut[static_cast<std::size_t>(u)] = true;
  };

  for (int s = 0; s < n; ++s) {
    if (disc[static_cast<std::size_t>(s)] < 0) dfs(s, -1);
  }
  std::vector<int> out;
  for (int v = 0; v < n; ++v) {
    if (is_cut[static_cast<std::size_t>(v)]) out.push_back(v);
  }
  return out;
}

}  // namespace rp
