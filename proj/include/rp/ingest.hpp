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
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rp/network.hpp"
#include "rp/selection.hpp"

namespace rp {

// One completed ride; times in epoch seconds, coordinates in degrees.
struct RideRecord {
  double pickup_time = 0.0;
  double dropoff_time = 0.0;
  double pickup_lon = 0.0;
  double pickup_lat = 0.0;
  double dropoff_lon = 0.0;
  double dropoff_lat = 0.0;
};

// Reads the header row `pickup_time,dropoff_time,pickup_lon,pickup_lat,
// dropoff_lon,dropoff_lat` (any column order, extra columns ignored) and one
// ride per row, with RFC 4180 quoting. Throws Errc::kMalformedInput with the
// offending line number.
std::vector<RideRecord> read_rides_csv(std::istream& in);
std::vector<RideRecord> read_rides_csv(const std::string& path);

struct BoundingBox {
  double lat_min = 0.0, lat_max = 0.0, lon_min = 0.0, lon_max = 0.0;

  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }
};

// Half-open pickup-time window [start, end).
struct TimeWindow {
  double start = 0.0;
  double end = 0.0;
};

// Rides with both endpoints in the box and pickup time in the window.
std::vector<RideRecord> filter_rides(const std::vector<RideRecord>& rides, const BoundingBox& box,
                                     const TimeWindow& window);

struct ClusteringResult {
  Eigen::MatrixXd centroids;  // k x 2, columns (lat, lon)
  std::vector<int> origin_labels;
  std::vector<int> destination_labels;
  double inertia = 0.0;                // squared meters
  std::vector<double> inertia_history; // one entry per Lloyd iteration
  int iterations = 0;
};

// k-means with k-means++ seeding over the pooled pickup and dropoff points,
// in meters under an equirectangular projection centered on `box`. Stops
// when labels are stable or after `max_iterations`. Throws
// Errc::kTooFewPoints when fewer than k distinct points exist.
ClusteringResult cluster_endpoints(const std::vector<RideRecord>& rides, int k, const BoundingBox& box,
                                   std::uint64_t seed, int max_iterations = 300);

struct AggregationResult {
  TrafficNetwork network;
  std::vector<int> kept_clusters;     // cluster id of each network location
  std::vector<int> dropped_clusters;  // clusters outside the largest component
  std::size_t inter_cluster_rides = 0;
};

// Demand = ride count between clusters, travel time = mean ride duration in
// slots. Keeps the largest weakly connected component (ties: the one holding
// the smallest cluster id). Throws Errc::kEmptyAfterAggregation when no ride
// connects two different clusters.
AggregationResult aggregate_network(const std::vector<RideRecord>& rides, const ClusteringResult& clustering,
                                    double slot_seconds, double cost);

enum class SynthProfile { kSymmetric, kCommuter };

SynthProfile parse_synth_profile(std::string_view text);
std::string_view to_string(SynthProfile profile);

struct SynthInstance {
  TrafficNetwork network;
  AdvertiserCatalog catalog;
  std::vector<int> commercial;  // locations receiving commuter demand
};

struct SynthOptions {
  double cost = 0.6;
  double willingness_mean = 0.4;
};

// Random geometric network: a spanning tree plus each remaining pair with
// probability `density`, both directions present, travel time 1 + 3 *
// distance in the unit square, demand uniform on [1, 10]. The commuter
// profile triples residential-to-commercial demand relative to the reverse
// direction, where the first ceil(n/3) locations are commercial. Every arc
// and every incoming arc of every location gets an exponential willingness.
SynthInstance synth_instance(int n, double density, std::uint64_t seed, SynthProfile profile,
                             const SynthOptions& options = {});

}  // namespace rp
