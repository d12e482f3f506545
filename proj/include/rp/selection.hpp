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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rp/electrical.hpp"
#include "rp/extended.hpp"
#include "rp/network.hpp"

namespace rp {

struct ArcBid {
  int from = 0;
  int to = 0;
  double willingness = 0.0;
};

struct LocationOffer {
  int from = 0;
  double willingness = 0.0;
};

struct LocationBid {
  int location = 0;
  std::vector<LocationOffer> offers;  // one per incoming arc (from, location)
};

// Advertisers willing to collaborate; at most one is selected at a time.
struct AdvertiserCatalog {
  std::vector<ArcBid> arc_based;
  std::vector<LocationBid> location_based;

  // Throws when a bid names a non-arc or a negative willingness.
  void validate(const TrafficNetwork& net) const;
};

enum class AdvertiserMode { kArc, kLocation };

// One collaboration choice and the ad revenue vector it induces.
struct Candidate {
  std::string label;        // "(from,to)" or "location k"
  std::optional<Arc> arc;   // arc-based choice
  int location = -1;        // location-based choice
  AdRevenueVector ads;
};

std::vector<Candidate> arc_candidates(const TrafficNetwork& net, const AdvertiserCatalog& catalog);
std::vector<Candidate> location_candidates(const TrafficNetwork& net, const AdvertiserCatalog& catalog);
std::vector<Candidate> candidates_for(const TrafficNetwork& net, const AdvertiserCatalog& catalog,
                                      AdvertiserMode mode);

// Payoff of the uncapped pricing problem; equals the optimal payoff when no
// price cap binds and bounds it from above otherwise.
double delta(const TrafficNetwork& net, const AdRevenueVector& ads);

struct CandidateScore {
  std::size_t candidate = 0;
  double score = 0.0;
  std::optional<double> payoff;  // set when a pricing solve was performed
};

struct SelectionResult {
  std::size_t chosen = 0;  // index into `candidates`
  std::vector<Candidate> candidates;
  std::vector<CandidateScore> scores;  // in candidate order
  double payoff = 0.0;                 // optimal basic-model payoff of the choice
  bool closed_form_score = false;      // symmetric-demand score was used
  std::size_t search_depth = 0;        // h of the reduced search, 0 if unused
  std::size_t general_solves = 0;

  const Candidate& choice() const { return candidates[chosen]; }
};

// Symmetric-demand scores; callers normally use the select_* entry points.
double arc_score(const TrafficNetwork& net, const ElectricalNetwork& electrical, const Arc& arc, double willingness);
double location_score(const TrafficNetwork& net, const ElectricalNetwork& electrical, const LocationBid& bid);

// Falls back to scoring by delta() when demand is not symmetric.
SelectionResult select_arc_advertiser(const TrafficNetwork& net, const AdvertiserCatalog& catalog);
SelectionResult select_location_advertiser(const TrafficNetwork& net, const AdvertiserCatalog& catalog);

// Sort by delta() descending, solve until the first candidate with an empty
// active set (position h), then compare the first h by optimal payoff.
SelectionResult reduced_search(const TrafficNetwork& net, std::vector<Candidate> candidates);

enum class PricingModel { kBasic, kExtended };
enum class Strategy { kResistance, kOptimal, kRandom };

std::string_view to_string(Strategy strategy);

struct StrategyRow {
  Strategy strategy = Strategy::kResistance;
  double payoff = 0.0;
  double gap_to_optimal = 0.0;  // (optimal - payoff) / |optimal|
  std::optional<std::size_t> chosen;  // unset for the randomized average
};

struct StrategyComparison {
  std::vector<StrategyRow> rows;  // resistance, optimal, random
  std::vector<double> candidate_payoffs;
  std::vector<double> candidate_deltas;
  std::vector<Candidate> candidates;

  const StrategyRow& row(Strategy s) const;
};

struct CompareOptions {
  AdvertiserMode mode = AdvertiserMode::kLocation;
  PricingModel model = PricingModel::kBasic;
  ExtendedParams extended;  // used when model == kExtended
  std::uint64_t seed = 0;
  int random_trials = 100;
};

StrategyComparison strategy_compare(const TrafficNetwork& net, const AdvertiserCatalog& catalog,
                                    const CompareOptions& options);

}  // namespace rp
