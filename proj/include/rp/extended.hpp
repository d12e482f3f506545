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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rp/network.hpp"

namespace rp {

// Reservation-price distribution. Uniform: F(p) = min(p, 1).
// Exponential: F(p) = 1 - exp(-gamma p).
struct DemandModel {
  enum class Kind { kUniform, kExponential };
  Kind kind = Kind::kUniform;
  double gamma = 2.0;

  static DemandModel uniform() { return {}; }
  static DemandModel exponential(double gamma);
  // "uniform" or "exp:<gamma>".
  static DemandModel parse(std::string_view text);

  double cdf(double price) const;
  // Feasible price range. Exponential prices may be +inf (arc not served).
  double min_price() const;
  double max_price() const;
  std::string to_string() const;
};

struct ExtendedParams {
  double eta = 0.8;   // empty-to-full cost ratio
  double psi = 300.0; // fleet capacity (total vehicle mass)
  DemandModel demand;

  void validate() const;
};

/*
  Extended-model solution. `prices` follow TrafficNetwork::arcs();
  `empty_flows` follow `empty_routes` (the arc set followed by any extra
  routes of the network). Reparametrized by served flow the problem is
  concave for both demand models, so the point is a global optimum and
  `local_only` is always false.
*/
struct ExtendedSolution {
  Eigen::VectorXd prices;
  Eigen::VectorXd served_flows;
  std::vector<EmptyRoute> empty_routes;
  Eigen::VectorXd empty_flows;
  Eigen::VectorXd lambda;  // balance duals, last location pinned to 0
  double capacity_dual = 0.0;
  double payoff = 0.0;
  double capacity_used = 0.0;
  double capacity_slack = 0.0;
  double balance_residual = 0.0;
  double kkt_residual = 0.0;
  bool local_only = false;
  int iterations = 0;
};

// Arc set followed by the extra empty-vehicle routes of `net`.
std::vector<EmptyRoute> empty_routes(const TrafficNetwork& net);

// Throws Errc::kNoConvergence at the iteration cap.
ExtendedSolution solve_extended(const TrafficNetwork& net, const AdRevenueVector& ads, const ExtendedParams& params);

// Payoff of an arbitrary point. `empty_flows` aligns with empty_routes(net).
// Throws Errc::kInfeasiblePoint naming the first violated constraint.
double payoff_extended(const TrafficNetwork& net, const AdRevenueVector& ads, const ExtendedParams& params,
                       const Eigen::VectorXd& prices, const Eigen::VectorXd& empty_flows, double tolerance = 1e-8);

}  // namespace rp
