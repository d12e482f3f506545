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

#include "rp/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/core.h>

#include "rp/convex_flow.hpp"
#include "rp/electrical.hpp"
#include "rp/error.hpp"

namespace rp {
namespace {

constexpr double kPriceCapSlack = 1e-12;
constexpr double kNegativeMuSlack = 1e-10;
constexpr double kCapSnap = 1e-10;
constexpr double kMuSnap = 1e-11;

Eigen::VectorXd pin_last(Eigen::VectorXd lambda) {
  if (lambda.size() > 0) lambda.array() -= lambda[lambda.size() - 1];
  return lambda;
}

// Per-arc constants; threshold = xi (1 + a - c) is the dual gap at which an
// arc's flow vanishes.
struct ArcTerms {
  std::vector<int> from, to;
  Eigen::VectorXd theta, xi, threshold;

  ArcTerms(const TrafficNetwork& net, const AdRevenueVector& ads) {
    const auto m = static_cast<Eigen::Index>(net.arc_count());
    theta.resize(m);
    xi.resize(m);
    threshold.resize(m);
    for (std::size_t k = 0; k < net.arc_count(); ++k) {
      const auto e = static_cast<Eigen::Index>(k);
      from.push_back(net.arc(k).from);
      to.push_back(net.arc(k).to);
      theta[e] = net.arc_demand(k);
      xi[e] = net.arc_travel_time(k);
      threshold[e] = xi[e] * (1.0 + ads[k] - net.unit_cost());
    }
  }

  Eigen::Index size() const { return theta.size(); }
  int tail(Eigen::Index k) const { return from[static_cast<std::size_t>(k)]; }
  int head(Eigen::Index k) const { return to[static_cast<std::size_t>(k)]; }
};

// Prices and duals implied by pinning the arcs with kept[k] == false.
struct MaskedPoint {
  Eigen::VectorXd prices;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;  // may be negative on pinned arcs of a wrong guess
};

/*
  Kept arcs get the closed-form price of the masked electrical network.
  Within a component the duals are L^+ v up to a constant; the constants of
  different components are chosen so that every pinned arc between
  components has mu >= 0, a system of difference constraints solved by
  Bellman-Ford. When that system is infeasible the constants follow `hint`.
*/
MaskedPoint evaluate_mask(const TrafficNetwork& net, const AdRevenueVector& ads, const ArcTerms& terms,
                          const ArcMask& kept, const Eigen::VectorXd* hint) {
  const ElectricalNetwork electrical = build_electrical(net, kept);
  const Eigen::VectorXd v = value_vector(net, ads, kept);
  const Eigen::VectorXd gap = resistance_potential_gap(net, electrical, v);
  const double c = net.unit_cost();

  MaskedPoint out;
  out.prices.resize(terms.size());
  for (Eigen::Index k = 0; k < terms.size(); ++k) {
    out.prices[k] = kept[static_cast<std::size_t>(k)] ? (1.0 - ads[static_cast<std::size_t>(k)] + c) / 2.0 +
                                                            gap[k] / (4.0 * terms.xi[k])
                                                      : 1.0;
  }

  Eigen::VectorXd local(net.size());
  for (const auto& comp : electrical.components()) {
    Eigen::VectorXd local_v(comp.size());
    for (int a = 0; a < comp.size(); ++a) local_v[a] = v[comp.nodes[static_cast<std::size_t>(a)]];
    const Eigen::VectorXd x = comp.pseudoinverse * local_v;
    for (int a = 0; a < comp.size(); ++a) local[comp.nodes[static_cast<std::size_t>(a)]] = x[a];
  }

  // shift[A] - shift[B] >= threshold - (local_i - local_j) for pinned (i, j)
  // with i in A and j in B, i.e. shift[B] <= shift[A] + weight.
  const auto count = electrical.components().size();
  std::vector<double> shift(count, 0.0);
  struct Edge {
    std::size_t a, b;
    double weight;
  };
  std::vector<Edge> edges;
  for (Eigen::Index k = 0; k < terms.size(); ++k) {
    if (kept[static_cast<std::size_t>(k)]) continue;
    const int i = terms.tail(k), j = terms.head(k);
    const auto a = static_cast<std::size_t>(electrical.component_of(i));
    const auto b = static_cast<std::size_t>(electrical.component_of(j));
    if (a != b) edges.push_back({a, b, (local[i] - local[j]) - terms.threshold[k]});
  }
  bool feasible = true;
  for (std::size_t round = 0; round <= count; ++round) {
    bool relaxed = false;
    for (const Edge& e : edges) {
      if (shift[e.a] + e.weight < shift[e.b] - 1e-15 * (1.0 + std::abs(shift[e.b]))) {
        shift[e.b] = shift[e.a] + e.weight;
        relaxed = true;
      }
    }
    if (!relaxed) break;
    if (round == count) feasible = false;
  }
  if (!feasible) {
    std::vector<double> total(count, 0.0);
    std::vector<int> size(count, 0);
    for (int i = 0; i < net.size(); ++i) {
      const auto a = static_cast<std::size_t>(electrical.component_of(i));
      total[a] += hint ? (*hint)[i] - local[i] : 0.0;
      ++size[a];
    }
    for (std::size_t a = 0; a < count; ++a) shift[a] = total[a] / size[a];
  }

  out.lambda.resize(net.size());
  for (int i = 0; i < net.size(); ++i) out.lambda[i] = local[i] + shift[static_cast<std::size_t>(electrical.component_of(i))];
  out.mu = Eigen::VectorXd::Zero(terms.size());
  for (Eigen::Index k = 0; k < terms.size(); ++k) {
    if (!kept[static_cast<std::size_t>(k)]) {
      out.mu[k] = terms.theta[k] * (out.lambda[terms.tail(k)] - out.lambda[terms.head(k)] - terms.threshold[k]);
    }
  }
  return out;
}

PricingSolution assemble(const TrafficNetwork& net, const AdRevenueVector& ads, const ArcMask& kept,
                         const MaskedPoint& point, int iterations) {
  const auto m = static_cast<Eigen::Index>(net.arc_count());
  PricingSolution sol;
  sol.prices = point.prices.cwiseMin(1.0);
  sol.mu = point.mu.cwiseMax(0.0);
  // Active means mu > 0. Pinned arcs with mu ~ 0 are degenerate and count
  // as free; their zero flow is reproduced by the unpinned formula.
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    if (kept[k] && sol.prices[e] >= 1.0 - kCapSnap) sol.prices[e] = 1.0;
    if (sol.mu[e] <= kMuSnap) sol.mu[e] = 0.0;
    if (sol.mu[e] > 0.0) sol.active_set.push_back(k);
  }
  sol.flows.resize(m);
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    sol.flows[e] = net.arc_demand(k) * (1.0 - sol.prices[e]);
  }
  sol.lambda = pin_last(point.lambda);
  const PayoffBreakdown pb = payoff_and_surplus(net, ads, sol.prices);
  sol.payoff = pb.payoff;
  sol.consumer_surplus = pb.consumer_surplus;
  sol.iterations = iterations;
  sol.kkt_residual = kkt_residual(net, ads, sol.prices, sol.lambda, sol.mu);
  return sol;
}

// Interior-point solve of the flow-space problem; returns the pinned-arc
// guess (flow below its bound multiplier) and the balance duals.
std::optional<std::pair<ArcMask, Eigen::VectorXd>> interior_guess(const TrafficNetwork& net, const ArcTerms& terms) {
  ConvexFlowProgram program;
  program.nodes = net.size();
  for (Eigen::Index k = 0; k < terms.size(); ++k) {
    FlowVariable var;
    var.from = terms.tail(k);
    var.to = terms.head(k);
    var.linear = terms.threshold[k];
    var.quadratic = terms.xi[k] / terms.theta[k];
    program.variables.push_back(var);
  }
  try {
    const ConvexFlowResult r = solve_convex_flow(program, {1e-10, 200});
    ArcMask kept(static_cast<std::size_t>(terms.size()));
    for (Eigen::Index k = 0; k < terms.size(); ++k) kept[static_cast<std::size_t>(k)] = r.x[k] > r.lower_duals[k];
    // Flow-space duals are half the price-space ones (q = theta (1 - p)).
    return std::pair{kept, Eigen::VectorXd(2.0 * r.potentials)};
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Single-swap active-set loop: the most over-cap kept arc is pinned, else
// the pinned arc with the most negative mu is released. An arc that just
// moved may not move back on the next iteration.
std::optional<PricingSolution> active_set_loop(const TrafficNetwork& net, const AdRevenueVector& ads,
                                               const ArcTerms& terms, ArcMask kept, const Eigen::VectorXd* hint,
                                               int cap, double tolerance, int* iterations) {
  std::optional<std::size_t> last_pinned, last_released;
  for (int it = 1; it <= cap; ++it) {
    ++*iterations;
    const MaskedPoint point = evaluate_mask(net, ads, terms, kept, hint);
    std::optional<std::size_t> enter;
    double worst = kPriceCapSlack;
    for (Eigen::Index k = 0; k < terms.size(); ++k) {
      const auto u = static_cast<std::size_t>(k);
      if (kept[u] && u != last_released && point.prices[k] - 1.0 > worst) {
        worst = point.prices[k] - 1.0;
        enter = u;
      }
    }
    if (enter) {
      kept[*enter] = false;
      last_pinned = enter;
      last_released.reset();
      continue;
    }
    std::optional<std::size_t> leave;
    worst = -kNegativeMuSlack;
    for (Eigen::Index k = 0; k < terms.size(); ++k) {
      const auto u = static_cast<std::size_t>(k);
      if (!kept[u] && u != last_pinned && point.mu[k] < worst) {
        worst = point.mu[k];
        leave = u;
      }
    }
    if (leave) {
      kept[*leave] = true;
      last_released = leave;
      last_pinned.reset();
      continue;
    }
    PricingSolution sol = assemble(net, ads, kept, point, *iterations);
    if (sol.kkt_residual <= tolerance) return sol;
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

ArcMask PricingSolution::kept_arcs() const {
  ArcMask kept(static_cast<std::size_t>(prices.size()), true);
  for (auto k : active_set) kept[k] = false;
  return kept;
}

std::optional<PricingSolution> solve_closed_form(const TrafficNetwork& net, const AdRevenueVector& ads) {
  if (ads.size() != net.arc_count()) throw Error(Errc::kDimensionMismatch, "ad revenue vector does not match arcs");
  const ArcTerms terms(net, ads);
  const ArcMask all(net.arc_count(), true);
  const MaskedPoint point = evaluate_mask(net, ads, terms, all, nullptr);
  if (point.prices.size() > 0 && point.prices.maxCoeff() > 1.0 + kPriceCapSlack) return std::nullopt;
  return assemble(net, ads, all, point, 1);
}

PricingSolution solve_general(const TrafficNetwork& net, const AdRevenueVector& ads,
                              const GeneralSolverOptions& options) {
  if (auto closed = solve_closed_form(net, ads)) return *std::move(closed);
  const ArcTerms terms(net, ads);
  const int cap = options.max_iterations > 0 ? options.max_iterations
                                             : std::max(10, 4 * static_cast<int>(net.arc_count()));
  int iterations = 1;
  if (const auto guess = options.interior_warm_start ? interior_guess(net, terms) : std::nullopt) {
    if (auto sol = active_set_loop(net, ads, terms, guess->first, &guess->second, cap, options.kkt_tolerance,
                                   &iterations)) {
      return *std::move(sol);
    }
  }
  if (auto sol = active_set_loop(net, ads, terms, ArcMask(net.arc_count(), true), nullptr, cap,
                                 options.kkt_tolerance, &iterations)) {
    return *std::move(sol);
  }
  throw Error(Errc::kNoConvergence, fmt::format("active-set pricing did not converge in {} iterations", cap));
}

bool check_mu_zero_sufficient(const TrafficNetwork& net, const AdRevenueVector& ads) {
  const Eigen::VectorXd v = value_vector(net, ads);
  const double lhs = v.cwiseAbs().sum();
  const auto& theta = net.demand();
  const auto& xi = net.travel_time();
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const Arc& a = net.arc(k);
    const double reverse = theta(a.to, a.from) > 0.0 ? theta(a.to, a.from) * xi(a.from, a.to) / xi(a.to, a.from) : 0.0;
    bound = std::min(bound, 2.0 * (theta(a.from, a.to) + reverse) * (1.0 + ads[k] - net.unit_cost()));
  }
  return lhs <= bound;
}

PayoffBreakdown payoff_and_surplus(const TrafficNetwork& net, const AdRevenueVector& ads,
                                   const Eigen::VectorXd& prices) {
  if (static_cast<std::size_t>(prices.size()) != net.arc_count()) {
    throw Error(Errc::kDimensionMismatch, "price vector does not match the arc set");
  }
  PayoffBreakdown out;
  const auto m = static_cast<Eigen::Index>(net.arc_count());
  out.payoff_per_arc.resize(m);
  out.surplus_per_arc.resize(m);
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    const double p = prices[e];
    if (p > 1.0 + 1e-9) {
      throw Error(Errc::kInfeasiblePoint, fmt::format("price {} on arc #{} exceeds 1", p, k));
    }
    const double mass = net.arc_demand(k) * net.arc_travel_time(k);
    out.payoff_per_arc[e] = mass * (1.0 - p) * (p + ads[k] - net.unit_cost());
    out.surplus_per_arc[e] = 0.5 * mass * (1.0 - p) * (1.0 - p);
  }
  out.payoff = out.payoff_per_arc.sum();
  out.consumer_surplus = out.surplus_per_arc.sum();
  return out;
}

double kkt_residual(const TrafficNetwork& net, const AdRevenueVector& ads, const Eigen::VectorXd& prices,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu) {
  const double c = net.unit_cost();
  Eigen::VectorXd balance = Eigen::VectorXd::Zero(net.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    const Arc& a = net.arc(k);
    const double theta = net.arc_demand(k);
    const double xi = net.arc_travel_time(k);
    const double p = prices[e];
    const double q = theta * (1.0 - p);
    balance[a.from] += q;
    balance[a.to] -= q;
    const double stationarity = theta * xi * (2.0 * p - 1.0 - c + ads[k]) - theta * (lambda[a.from] - lambda[a.to]) + mu[e];
    worst = std::max({worst, p - 1.0, -mu[e], std::abs(mu[e] * (1.0 - p)), std::abs(stationarity)});
  }
  return std::max(worst, balance.cwiseAbs().maxCoeff());
}

Eigen::VectorXd price_sensitivity(const TrafficNetwork& net, const AdRevenueVector& ads, std::size_t arc,
                                  const SensitivityOptions& options) {
  if (arc >= net.arc_count()) throw Error(Errc::kDimensionMismatch, "sensitivity arc index out of range");
  const PricingSolution base = solve_general(net, ads);
  const auto probe = [&](double delta) {
    const double value = ads[arc] + delta;
    if (value < 0.0) return;
    if (solve_general(net, ads.with(arc, value)).active_set != base.active_set) {
      throw Error(Errc::kRegimeBoundary,
                  fmt::format("active set changes when a({},{}) moves by {}", net.arc(arc).from, net.arc(arc).to, delta));
    }
  };
  probe(options.regime_probe);
  probe(-options.regime_probe);

  const ArcMask kept = base.kept_arcs();
  const auto m = static_cast<Eigen::Index>(net.arc_count());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  if (!kept[arc]) return out;

  const ElectricalNetwork electrical = build_electrical(net, kept);
  const int x = net.arc(arc).from;
  const int y = net.arc(arc).to;
  const double theta_xy = net.arc_demand(arc);
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    if (!kept[k]) continue;
    const int i = net.arc(k).from;
    const int j = net.arc(k).to;
    double d = k == arc ? -0.5 : 0.0;
    if (electrical.connected(i, x)) {
      const auto r = [&](int s, int t) { return electrical.effective_resistance(s, t); };
      d += theta_xy / (4.0 * net.arc_travel_time(k)) * (r(j, x) - r(i, x) - r(j, y) + r(i, y));
    }
    out[static_cast<Eigen::Index>(k)] = d;
  }
  return out;
}

}  // namespace rp
