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


#include "rp/extended.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "rp/convex_flow.hpp"
#include "rp/error.hpp"

namespace rp {

namespace {

// Price at which the served flow of an arc with demand theta equals y.
double price_from_flow(const DemandModel& model, double theta, double y) {
  if (model.kind == DemandModel::Kind::kUniform) return 1.0 - y / theta;
  if (y <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(y / theta) / model.gamma;
}

double served_flow(const DemandModel& model, double theta, double price) {
  if (model.kind == DemandModel::Kind::kExponential) return theta * std::exp(-model.gamma * price);
  return theta * (1.0 - model.cdf(price));
}

}  // namespace

DemandModel DemandModel::exponential(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(Errc::kUsage, fmt::format("exponential demand needs gamma > 0, got {}", gamma));
  }
  return {Kind::kExponential, gamma};
}

DemandModel DemandModel::parse(std::string_view text) {
  if (text == "uniform") return uniform();
  for (std::string_view prefix : {"exp:", "exponential:"}) {
    if (text.starts_with(prefix)) {
      const std::string_view number = text.substr(prefix.size());
      double gamma = 0.0;
      const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), gamma);
      if (ec != std::errc() || end != number.data() + number.size()) break;
      return exponential(gamma);
    }
  }
  throw Error(Errc::kUsage, fmt::format("unknown demand model '{}' (expected uniform or exp:<gamma>)", text));
}

double DemandModel::cdf(double price) const {
  if (kind == Kind::kUniform) return std::min(price, 1.0);
  return 1.0 - std::exp(-gamma * price);
}

double DemandModel::min_price() const { return -std::numeric_limits<double>::infinity(); }

double DemandModel::max_price() const {
  return kind == Kind::kUniform ? 1.0 : std::numeric_limits<double>::infinity();
}

std::string DemandModel::to_string() const {
  return kind == Kind::kUniform ? std::string("uniform") : fmt::format("exp:{}", gamma);
}

void ExtendedParams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(Errc::kUsage, fmt::format("eta must be positive, got {}", eta));
  if (!(psi > 0.0) || !std::isfinite(psi)) throw Error(Errc::kUsage, fmt::format("psi must be positive, got {}", psi));
  if (demand.kind == DemandModel::Kind::kExponential && !(demand.gamma > 0.0)) {
    throw Error(Errc::kUsage, "exponential demand needs gamma > 0");
  }
}

std::vector<EmptyRoute> empty_routes(const TrafficNetwork& net) {
  std::vector<EmptyRoute> routes;
  routes.reserve(net.arc_count() + net.extra_empty_routes().size());
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    routes.push_back({net.arc(k).from, net.arc(k).to, net.arc_travel_time(k)});
  }
  routes.insert(routes.end(), net.extra_empty_routes().begin(), net.extra_empty_routes().end());
  return routes;
}

ExtendedSolution solve_extended(const TrafficNetwork& net, const AdRevenueVector& ads, const ExtendedParams& params) {
  params.validate();
  if (ads.size() != net.arc_count()) throw Error(Errc::kDimensionMismatch, "ad revenue vector does not match arcs");
  const double c = net.unit_cost();
  const DemandModel& model = params.demand;

  // Variables: served flow y per arc, then empty flow w per route.
  ConvexFlowProgram program;
  program.nodes = net.size();
  program.capacity = params.psi;
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const double theta = net.arc_demand(k);
    const double xi = net.arc_travel_time(k);
    FlowVariable var;
    var.from = net.arc(k).from;
    var.to = net.arc(k).to;
    var.weight = xi;
    if (model.kind == DemandModel::Kind::kUniform) {
      // xi y (p + a - c) with p = 1 - y / theta.
      var.linear = xi * (1.0 + ads[k] - c);
      var.quadratic = xi / theta;
    } else {
      // xi y (p + a - c) with p = -log(y / theta) / gamma; y = 0 is p = inf.
      var.linear = xi * (ads[k] - c);
      var.entropy = xi / model.gamma;
      var.scale = theta;
    }
    program.variables.push_back(var);
  }
  const std::vector<EmptyRoute> routes = empty_routes(net);
  for (const EmptyRoute& route : routes) {
    FlowVariable var;
    var.from = route.from;
    var.to = route.to;
    var.weight = route.travel_time;
    var.linear = -route.travel_time * params.eta * c;
    program.variables.push_back(var);
  }

  const ConvexFlowResult flow = solve_convex_flow(program);

  ExtendedSolution out;
  const auto arcs = static_cast<Eigen::Index>(net.arc_count());
  out.served_flows = flow.x.head(arcs);
  out.empty_flows = flow.x.tail(static_cast<Eigen::Index>(routes.size()));
  out.empty_routes = routes;
  out.prices.resize(arcs);
  for (Eigen::Index k = 0; k < arcs; ++k) {
    out.prices[k] = price_from_flow(model, net.arc_demand(static_cast<std::size_t>(k)), out.served_flows[k]);
  }
  out.lambda = flow.potentials;
  out.capacity_dual = flow.capacity_dual;
  out.payoff = flow.objective;
  out.capacity_used = 0.0;
  for (std::size_t k = 0; k < program.variables.size(); ++k) {
    out.capacity_used += program.variables[k].weight * flow.x[static_cast<Eigen::Index>(k)];
  }
  out.capacity_slack = params.psi - out.capacity_used;
  out.balance_residual = flow.balance;
  out.kkt_residual = std::max({flow.stationarity, flow.balance, flow.complementarity});
  out.local_only = false;
  out.iterations = flow.iterations;
  return out;
}

double payoff_extended(const TrafficNetwork& net, const AdRevenueVector& ads, const ExtendedParams& params,
                       const Eigen::VectorXd& prices, const Eigen::VectorXd& empty_flows, double tolerance) {
  params.validate();
  const std::vector<EmptyRoute> routes = empty_routes(net);
  if (static_cast<std::size_t>(prices.size()) != net.arc_count() || ads.size() != net.arc_count() ||
      static_cast<std::size_t>(empty_flows.size()) != routes.size()) {
    throw Error(Errc::kDimensionMismatch, "price, ad or empty-flow vector does not match the network");
  }
  const DemandModel& model = params.demand;
  const double c = net.unit_cost();

  Eigen::VectorXd balance = Eigen::VectorXd::Zero(net.size());
  double mass = 0.0;
  double payoff = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const double p = prices[static_cast<Eigen::Index>(k)];
    if (std::isnan(p) || p > model.max_price() + tolerance || p < model.min_price() - tolerance ||
        (!std::isfinite(p) && p != model.max_price())) {
      throw Error(Errc::kInfeasiblePoint, fmt::format("price_bound: price {} on arc ({},{}) is outside [{}, {}]", p,
                                                      net.arc(k).from, net.arc(k).to, model.min_price(),
                                                      model.max_price()));
    }
    const double y = served_flow(model, net.arc_demand(k), p);
    const double xi = net.arc_travel_time(k);
    if (y > 0.0) payoff += xi * y * (p + ads[k] - c);
    mass += xi * y;
    balance[net.arc(k).from] += y;
    balance[net.arc(k).to] -= y;
    scale = std::max(scale, std::abs(y));
  }
  for (std::size_t r = 0; r < routes.size(); ++r) {
    const double w = empty_flows[static_cast<Eigen::Index>(r)];
    if (!std::isfinite(w) || w < -tolerance) {
      throw Error(Errc::kInfeasiblePoint,
                  fmt::format("empty_flow_nonnegative: w = {} on ({},{})", w, routes[r].from, routes[r].to));
    }
    payoff -= routes[r].travel_time * w * params.eta * c;
    mass += routes[r].travel_time * w;
    balance[routes[r].from] += w;
    balance[routes[r].to] -= w;
    scale = std::max(scale, std::abs(w));
  }
  for (int i = 0; i < net.size(); ++i) {
    if (std::abs(balance[i]) > tolerance * scale) {
      throw Error(Errc::kInfeasiblePoint,
                  fmt::format("flow_balance: location {} has net outflow {}", i, balance[i]));
    }
  }
  if (mass > params.psi + tolerance) {
    throw Error(Errc::kInfeasiblePoint, fmt::format("capacity: vehicle mass {} exceeds psi {}", mass, params.psi));
  }
  return payoff;
}

}  // namespace rp
