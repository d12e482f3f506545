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
#include <vector>

#include <Eigen/Dense>

#include "rp/network.hpp"

namespace rp {

/*
  Optimal spatial prices for the basic model.

  Per-arc vectors follow TrafficNetwork::arcs() order. `lambda` is the
  flow-balance dual with the last location pinned to zero; only its
  differences matter. `active_set` lists arcs with mu > 0; their price is 1
  and their flow 0. A free arc may also sit at price 1 with mu = 0.
*/
struct PricingSolution {
  Eigen::VectorXd prices;
  Eigen::VectorXd flows;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  std::vector<std::size_t> active_set;
  double payoff = 0.0;
  double consumer_surplus = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;

  // Arcs kept in the electrical network that determined the prices.
  ArcMask kept_arcs() const;
};

struct PayoffBreakdown {
  double payoff = 0.0;
  double consumer_surplus = 0.0;
  Eigen::VectorXd payoff_per_arc;
  Eigen::VectorXd surplus_per_arc;
};

struct GeneralSolverOptions {
  double kkt_tolerance = 1e-8;
  // 0 selects the default cap of 4 * |arcs| (at least 10).
  int max_iterations = 0;
  // Seed the active-set loop from an interior-point solve; otherwise it
  // starts from the empty active set.
  bool interior_warm_start = true;
};

// Prices from effective resistances of the unmasked network. Returns
// nullopt when some price exceeds 1, i.e. the price cap would bind.
std::optional<PricingSolution> solve_closed_form(const TrafficNetwork& net, const AdRevenueVector& ads);

// KKT point of the capped pricing problem. Each active-set iteration prices
// the free arcs on the electrical network without the pinned ones, then
// pins the worst over-cap arc or releases the pinned arc with the most
// negative mu. Falls back to a cold start when the warm start fails; throws
// Errc::kNoConvergence when both exhaust the iteration cap.
PricingSolution solve_general(const TrafficNetwork& net, const AdRevenueVector& ads,
                              const GeneralSolverOptions& options = {});

// Sufficient (not necessary) test that no price cap binds.
bool check_mu_zero_sufficient(const TrafficNetwork& net, const AdRevenueVector& ads);

// Payoff and consumer surplus of arbitrary prices (all must be <= 1).
PayoffBreakdown payoff_and_surplus(const TrafficNetwork& net, const AdRevenueVector& ads,
                                   const Eigen::VectorXd& prices);

// Max violation over flow balance, price cap, dual sign, complementarity
// and stationarity.
double kkt_residual(const TrafficNetwork& net, const AdRevenueVector& ads, const Eigen::VectorXd& prices,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu);

struct SensitivityOptions {
  // Perturbation used to detect an active-set change around `ads`.
  double regime_probe = 1e-6;
};

// d p_ij / d a_xy for every arc (i, j), where (x, y) is `arc`. Uses the
// network of arcs left free by the current active set. Throws
// Errc::kRegimeBoundary when the active set changes under a +/- probe.
Eigen::VectorXd price_sensitivity(const TrafficNetwork& net, const AdRevenueVector& ads, std::size_t arc,
                                  const SensitivityOptions& options = {});

}  // namespace rp
