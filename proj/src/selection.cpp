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


#include "rp/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include <fmt/core.h>

#include "rp/error.hpp"
#include "rp/parallel.hpp"
#include "rp/pricing.hpp"

namespace rp {

namespace {

// Scores within this relative distance are ties.
constexpr double kTieTolerance = 1e-12;

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

// Tie-break key: arc (from, to), then location, then list position.
std::tuple<int, int, int, std::size_t> tie_key(const Candidate& c, std::size_t index) {
  if (c.arc) return {0, c.arc->from, c.arc->to, index};
  if (c.location >= 0) return {1, c.location, 0, index};
  return {2, 0, 0, index};
}

// Index of the best score; ties go to the smallest tie_key.
std::size_t argmax(const std::vector<Candidate>& candidates, const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (nearly_equal(scores[i], scores[best])) {
      if (tie_key(candidates[i], i) < tie_key(candidates[best], best)) best = i;
    } else if (scores[i] > scores[best]) {
      best = i;
    }
  }
  return best;
}

std::size_t require_arc(const TrafficNetwork& net, int from, int to, std::string_view what) {
  if (from < 0 || to < 0 || from >= net.size() || to >= net.size()) {
    throw Error(Errc::kMalformedInput, fmt::format("{} names location outside 0..{}", what, net.size() - 1));
  }
  const auto k = net.arc_index(from, to);
  if (!k) throw Error(Errc::kMalformedInput, fmt::format("{} names ({},{}), which is not an arc", what, from, to));
  return *k;
}

void require_willingness(double value, std::string_view what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(Errc::kInvalidAdRevenue, fmt::format("{} has willingness {}; expected a finite value >= 0", what, value));
  }
}

SelectionResult select_by_score(const TrafficNetwork& net, std::vector<Candidate> candidates,
                                std::vector<double> scores, bool closed_form) {
  if (candidates.empty()) throw Error(Errc::kMalformedInput, "advertiser catalog has no candidates");
  SelectionResult result;
  result.chosen = argmax(candidates, scores);
  result.closed_form_score = closed_form;
  for (std::size_t i = 0; i < candidates.size(); ++i) result.scores.push_back({i, scores[i], std::nullopt});
  result.payoff = solve_general(net, candidates[result.chosen].ads).payoff;
  result.scores[result.chosen].payoff = result.payoff;
  result.general_solves = 1;
  result.candidates = std::move(candidates);
  return result;
}

std::vector<double> deltas(const TrafficNetwork& net, const std::vector<Candidate>& candidates) {
  return parallel_map(candidates.size(), [&](std::size_t i) { return delta(net, candidates[i].ads); });
}

}  // namespace

void AdvertiserCatalog::validate(const TrafficNetwork& net) const {
  std::set<std::size_t> arcs_seen;
  for (const ArcBid& bid : arc_based) {
    const std::string what = fmt::format("arc-based advertiser ({},{})", bid.from, bid.to);
    const std::size_t k = require_arc(net, bid.from, bid.to, what);
    require_willingness(bid.willingness, what);
    if (!arcs_seen.insert(k).second) throw Error(Errc::kMalformedInput, what + " is listed twice");
  }
  std::set<int> locations_seen;
  for (const LocationBid& bid : location_based) {
    const std::string what = fmt::format("location-based advertiser {}", bid.location);
    if (bid.location < 0 || bid.location >= net.size()) {
      throw Error(Errc::kMalformedInput, what + " is outside the network");
    }
    if (!locations_seen.insert(bid.location).second) throw Error(Errc::kMalformedInput, what + " is listed twice");
    std::set<int> from_seen;
    for (const LocationOffer& offer : bid.offers) {
      require_arc(net, offer.from, bid.location, what);
      require_willingness(offer.willingness, what);
      if (!from_seen.insert(offer.from).second) {
        throw Error(Errc::kMalformedInput, fmt::format("{} lists origin {} twice", what, offer.from));
      }
    }
  }
}

std::vector<Candidate> arc_candidates(const TrafficNetwork& net, const AdvertiserCatalog& catalog) {
  catalog.validate(net);
  std::vector<Candidate> out;
  for (const ArcBid& bid : catalog.arc_based) {
    const std::size_t k = *net.arc_index(bid.from, bid.to);
    out.push_back({fmt::format("({},{})", bid.from, bid.to), Arc{bid.from, bid.to}, -1,
                   AdRevenueVector::zeros(net).with(k, bid.willingness)});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return *a.arc < *b.arc; });
  return out;
}

std::vector<Candidate> location_candidates(const TrafficNetwork& net, const AdvertiserCatalog& catalog) {
  catalog.validate(net);
  std::vector<Candidate> out;
  for (const LocationBid& bid : catalog.location_based) {
    Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.arc_count()));
    for (const LocationOffer& offer : bid.offers) {
      values[static_cast<Eigen::Index>(*net.arc_index(offer.from, bid.location))] = offer.willingness;
    }
    out.push_back({fmt::format("location {}", bid.location), std::nullopt, bid.location,
                   AdRevenueVector::from_values(net, std::move(values))});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.location < b.location; });
  return out;
}

std::vector<Candidate> candidates_for(const TrafficNetwork& net, const AdvertiserCatalog& catalog,
                                      AdvertiserMode mode) {
  return mode == AdvertiserMode::kArc ? arc_candidates(net, catalog) : location_candidates(net, catalog);
}

double delta(const TrafficNetwork& net, const AdRevenueVector& ads) {
  const ElectricalNetwork electrical = build_electrical(net);
  const Eigen::VectorXd gap = resistance_potential_gap(net, electrical, value_vector(net, ads));
  const double c = net.unit_cost();
  double total = 0.0;
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const double theta = net.arc_demand(k);
    const double margin = 1.0 + ads[k] - c;
    total += theta * net.arc_travel_time(k) * 0.25 * margin * margin;
    total -= 0.125 * theta * margin * gap[static_cast<Eigen::Index>(k)];
  }
  return total;
}

double arc_score(const TrafficNetwork& net, const ElectricalNetwork& electrical, const Arc& arc, double willingness) {
  const std::size_t k = require_arc(net, arc.from, arc.to, "scored arc");
  const double theta = net.arc_demand(k);
  const double b = willingness;
  return theta * net.arc_travel_time(k) * (b * b + 2.0 * (1.0 - net.unit_cost()) * b) -
         theta * theta * b * b * electrical.effective_resistance(arc.from, arc.to);
}

double location_score(const TrafficNetwork& net, const ElectricalNetwork& electrical, const LocationBid& bid) {
  const int k = bid.location;
  const double c = net.unit_cost();
  double score = 0.0;
  for (const LocationOffer& s : bid.offers) {
    const std::size_t sk = require_arc(net, s.from, k, "scored location offer");
    const double d = s.willingness;
    score += net.arc_demand(sk) * net.arc_travel_time(sk) * (d * d + 2.0 * (1.0 - c) * d);
    for (const LocationOffer& t : bid.offers) {
      const std::size_t tk = *net.arc_index(t.from, k);
      const double coupling = electrical.effective_resistance(s.from, t.from) -
                              electrical.effective_resistance(s.from, k) - electrical.effective_resistance(t.from, k);
      score += 0.5 * net.arc_demand(sk) * net.arc_demand(tk) * d * t.willingness * coupling;
    }
  }
  return score;
}

SelectionResult select_arc_advertiser(const TrafficNetwork& net, const AdvertiserCatalog& catalog) {
  std::vector<Candidate> candidates = arc_candidates(net, catalog);
  if (!net.has_symmetric_demand()) {
    std::vector<double> scores = deltas(net, candidates);
    return select_by_score(net, std::move(candidates), std::move(scores), false);
  }
  const ElectricalNetwork electrical = build_electrical(net);
  std::vector<double> scores;
  for (const Candidate& c : candidates) scores.push_back(arc_score(net, electrical, *c.arc, c.ads[*net.arc_index(c.arc->from, c.arc->to)]));
  return select_by_score(net, std::move(candidates), std::move(scores), true);
}

SelectionResult select_location_advertiser(const TrafficNetwork& net, const AdvertiserCatalog& catalog) {
  std::vector<Candidate> candidates = location_candidates(net, catalog);
  if (!net.has_symmetric_demand()) {
    std::vector<double> scores = deltas(net, candidates);
    return select_by_score(net, std::move(candidates), std::move(scores), false);
  }
  const ElectricalNetwork electrical = build_electrical(net);
  std::vector<LocationBid> bids = catalog.location_based;
  std::sort(bids.begin(), bids.end(), [](const LocationBid& a, const LocationBid& b) { return a.location < b.location; });
  std::vector<double> scores;
  for (const LocationBid& bid : bids) scores.push_back(location_score(net, electrical, bid));
  return select_by_score(net, std::move(candidates), std::move(scores), true);
}

SelectionResult reduced_search(const TrafficNetwork& net, std::vector<Candidate> candidates) {
  if (candidates.empty()) throw Error(Errc::kMalformedInput, "reduced search needs at least one candidate");
  const std::vector<double> score = deltas(net, candidates);

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (!nearly_equal(score[a], score[b])) return score[a] > score[b];
    return tie_key(candidates[a], a) < tie_key(candidates[b], b);
  });

  SelectionResult result;
  for (std::size_t i = 0; i < candidates.size(); ++i) result.scores.push_back({i, score[i], std::nullopt});

  // Delta bounds the payoff from above and is exact with an empty active
  // set, so no candidate after the first such one can win.
  std::optional<std::size_t> best;
  for (std::size_t position = 0; position < order.size(); ++position) {
    const std::size_t i = order[position];
    const PricingSolution solution = solve_general(net, candidates[i].ads);
    result.scores[i].payoff = solution.payoff;
    ++result.general_solves;
    result.search_depth = position + 1;
    if (!best) {
      best = i;
    } else {
      const double incumbent = *result.scores[*best].payoff;
      if (nearly_equal(solution.payoff, incumbent)) {
        if (tie_key(candidates[i], i) < tie_key(candidates[*best], *best)) best = i;
      } else if (solution.payoff > incumbent) {
        best = i;
      }
    }
    if (solution.active_set.empty()) break;
  }
  result.chosen = *best;
  result.payoff = *result.scores[*best].payoff;
  result.candidates = std::move(candidates);
  return result;
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kResistance: return "resistance";
    case Strategy::kOptimal: return "optimal";
    case Strategy::kRandom: return "random";
  }
  return "unknown";
}

const StrategyRow& StrategyComparison::row(Strategy s) const {
  for (const StrategyRow& r : rows) {
    if (r.strategy == s) return r;
  }
  throw Error(Errc::kUsage, fmt::format("comparison has no row for strategy {}", to_string(s)));
}

StrategyComparison strategy_compare(const TrafficNetwork& net, const AdvertiserCatalog& catalog,
                                    const CompareOptions& options) {
  if (options.random_trials <= 0) throw Error(Errc::kUsage, "random_trials must be positive");
  if (options.model == PricingModel::kExtended) options.extended.validate();

  StrategyComparison out;
  out.candidates = candidates_for(net, catalog, options.mode);
  if (out.candidates.empty()) throw Error(Errc::kMalformedInput, "advertiser catalog has no candidates for this mode");
  out.candidate_deltas = deltas(net, out.candidates);
  out.candidate_payoffs = parallel_map(out.candidates.size(), [&](std::size_t i) {
    const AdRevenueVector& ads = out.candidates[i].ads;
    return options.model == PricingModel::kBasic ? solve_general(net, ads).payoff
                                                 : solve_extended(net, ads, options.extended).payoff;
  });

  const std::size_t resistance = argmax(out.candidates, out.candidate_deltas);
  const std::size_t optimal = argmax(out.candidates, out.candidate_payoffs);
  const double best = out.candidate_payoffs[optimal];

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, out.candidates.size() - 1);
  double random_total = 0.0;
  for (int t = 0; t < options.random_trials; ++t) random_total += out.candidate_payoffs[pick(rng)];
  const double random_mean = random_total / options.random_trials;

  const auto gap = [best](double payoff) { return best == 0.0 ? 0.0 : (best - payoff) / std::abs(best); };
  out.rows.push_back({Strategy::kResistance, out.candidate_payoffs[resistance],
                      gap(out.candidate_payoffs[resistance]), resistance});
  out.rows.push_back({Strategy::kOptimal, best, 0.0, optimal});
  out.rows.push_back({Strategy::kRandom, random_mean, gap(random_mean), std::nullopt});
  return out;
}

}  // namespace rp
