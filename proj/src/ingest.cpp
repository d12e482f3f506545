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


#include "rp/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string_view>
#include <utility>

#include <fmt/core.h>

#include "rp/error.hpp"

namespace rp {

namespace {

constexpr double kEarthRadiusMeters = 6371000.0;

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC 4180: comma separated, double-quoted fields may hold commas, quotes
// ("") and line breaks; CRLF or LF row endings.
std::vector<CsvRow> parse_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  row.line = line;
  const auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_row = [&] {
    end_field();
    if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
    row = CsvRow{};
    row.line = line;
  };
  char ch = 0;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) throw Error(Errc::kMalformedInput, fmt::format("line {}: stray quote in field", line));
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() != '\n') throw Error(Errc::kMalformedInput, fmt::format("line {}: bare carriage return", line));
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (quoted) throw Error(Errc::kMalformedInput, fmt::format("line {}: unterminated quoted field", line));
  if (field_started || !row.fields.empty()) end_row();
  return rows;
}

double parse_number(const std::string& text, std::size_t line, std::string_view column) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw Error(Errc::kMalformedInput, fmt::format("line {}: column {} is not a finite number: '{}'", line, column, text));
  }
  return value;
}

// Local equirectangular projection to meters.
struct Projection {
  double lat0 = 0.0, lon0 = 0.0, cos_lat0 = 1.0;

  explicit Projection(const BoundingBox& box)
      : lat0(0.5 * (box.lat_min + box.lat_max)),
        lon0(0.5 * (box.lon_min + box.lon_max)),
        cos_lat0(std::cos(lat0 * std::numbers::pi / 180.0)) {}

  Eigen::Vector2d forward(double lat, double lon) const {
    const double scale = kEarthRadiusMeters * std::numbers::pi / 180.0;
    return {(lon - lon0) * cos_lat0 * scale, (lat - lat0) * scale};
  }
  // Returns (lat, lon).
  Eigen::Vector2d inverse(const Eigen::Vector2d& xy) const {
    const double scale = kEarthRadiusMeters * std::numbers::pi / 180.0;
    return {lat0 + xy.y() / scale, lon0 + xy.x() / (cos_lat0 * scale)};
  }
};

int nearest(const Eigen::MatrixXd& centers, const Eigen::Vector2d& point, double* distance2) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c).transpose() - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance2) *distance2 = best_d;
  return best;
}

}  // namespace

std::vector<RideRecord> read_rides_csv(std::istream& in) {
  const std::vector<CsvRow> rows = parse_csv(in);
  if (rows.empty()) throw Error(Errc::kMalformedInput, "ride file is empty (a header row is required)");
  static constexpr std::string_view kColumns[] = {"pickup_time", "dropoff_time", "pickup_lon",
                                                  "pickup_lat",  "dropoff_lon",  "dropoff_lat"};
  std::array<std::size_t, 6> position{};
  for (std::size_t c = 0; c < 6; ++c) {
    const auto& header = rows[0].fields;
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) {
      throw Error(Errc::kMalformedInput, fmt::format("ride file header lacks column '{}'", kColumns[c]));
    }
    position[c] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<RideRecord> rides;
  rides.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.fields.size() != rows[0].fields.size()) {
      throw Error(Errc::kMalformedInput, fmt::format("line {}: expected {} fields, found {}", row.line,
                                                     rows[0].fields.size(), row.fields.size()));
    }
    std::array<double, 6> v{};
    for (std::size_t c = 0; c < 6; ++c) v[c] = parse_number(row.fields[position[c]], row.line, kColumns[c]);
    RideRecord ride{v[0], v[1], v[2], v[3], v[4], v[5]};
    if (!(ride.dropoff_time > ride.pickup_time)) {
      throw Error(Errc::kMalformedInput, fmt::format("line {}: dropoff_time must exceed pickup_time", row.line));
    }
    rides.push_back(ride);
  }
  return rides;
}

std::vector<RideRecord> read_rides_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kMalformedInput, fmt::format("cannot open ride file '{}'", path));
  return read_rides_csv(in);
}

std::vector<RideRecord> filter_rides(const std::vector<RideRecord>& rides, const BoundingBox& box,
                                     const TimeWindow& window) {
  std::vector<RideRecord> out;
  for (const RideRecord& r : rides) {
    if (box.contains(r.pickup_lat, r.pickup_lon) && box.contains(r.dropoff_lat, r.dropoff_lon) &&
        r.pickup_time >= window.start && r.pickup_time < window.end) {
      out.push_back(r);
    }
  }
  return out;
}

ClusteringResult cluster_endpoints(const std::vector<RideRecord>& rides, int k, const BoundingBox& box,
                                   std::uint64_t seed, int max_iterations) {
  if (k < 2) throw Error(Errc::kUsage, fmt::format("k must be at least 2, got {}", k));
  if (max_iterations < 1) throw Error(Errc::kUsage, "max_iterations must be positive");
  const Projection projection(box);
  const std::size_t n = 2 * rides.size();
  std::vector<Eigen::Vector2d> points(n);
  for (std::size_t i = 0; i < rides.size(); ++i) {
    points[2 * i] = projection.forward(rides[i].pickup_lat, rides[i].pickup_lon);
    points[2 * i + 1] = projection.forward(rides[i].dropoff_lat, rides[i].dropoff_lon);
  }
  {
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : points) distinct.emplace(p.x(), p.y());
    if (distinct.size() < static_cast<std::size_t>(k)) {
      throw Error(Errc::kTooFewPoints,
                  fmt::format("{} distinct endpoints cannot form {} clusters", distinct.size(), k));
    }
  }

  // k-means++ seeding.
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers(k, 2);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  centers.row(0) = points[first].transpose();
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points[i] - centers.row(c - 1).transpose()).squaredNorm());
      total += d2[i];
    }
    double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t chosen = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      chosen = i;
      target -= d2[i];
      if (target < 0.0) break;
    }
    centers.row(c) = points[chosen].transpose();
  }

  // Lloyd iterations.
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = nearest(centers, points[i], nullptr);
  ClusteringResult result;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, 2);
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(labels[i]) += points[i].transpose();
      ++counts[static_cast<std::size_t>(labels[i])];
    }
    std::set<std::size_t> reseeded;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (reseeded.contains(i)) continue;
        const double d = (points[i] - (sums.row(labels[i]).transpose() /
                                       static_cast<double>(std::max<std::size_t>(1, counts[static_cast<std::size_t>(labels[i])]))))
                             .squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      reseeded.insert(far);
      centers.row(c) = points[far].transpose();
    }
    double inertia = 0.0;
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      const int label = nearest(centers, points[i], &d);
      changed = changed || label != labels[i];
      labels[i] = label;
      inertia += d;
    }
    result.inertia_history.push_back(inertia);
    result.iterations = iter;
    if (!changed) break;
  }

  result.inertia = result.inertia_history.back();
  result.centroids.resize(k, 2);
  for (int c = 0; c < k; ++c) result.centroids.row(c) = projection.inverse(centers.row(c).transpose()).transpose();
  result.origin_labels.resize(rides.size());
  result.destination_labels.resize(rides.size());
  for (std::size_t i = 0; i < rides.size(); ++i) {
    result.origin_labels[i] = labels[2 * i];
    result.destination_labels[i] = labels[2 * i + 1];
  }
  return result;
}

AggregationResult aggregate_network(const std::vector<RideRecord>& rides, const ClusteringResult& clustering,
                                    double slot_seconds, double cost) {
  if (!(slot_seconds > 0.0)) throw Error(Errc::kUsage, "slot_seconds must be positive");
  if (clustering.origin_labels.size() != rides.size() || clustering.destination_labels.size() != rides.size()) {
    throw Error(Errc::kDimensionMismatch, "clustering labels do not match the ride list");
  }
  const int k = static_cast<int>(clustering.centroids.rows());
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd duration = Eigen::MatrixXd::Zero(k, k);
  std::size_t inter = 0;
  for (std::size_t r = 0; r < rides.size(); ++r) {
    const int i = clustering.origin_labels[r];
    const int j = clustering.destination_labels[r];
    if (i < 0 || j < 0 || i >= k || j >= k) throw Error(Errc::kDimensionMismatch, "cluster label out of range");
    if (i == j) continue;
    const double seconds = rides[r].dropoff_time - rides[r].pickup_time;
    if (!(seconds > 0.0)) throw Error(Errc::kMalformedInput, fmt::format("ride {} has non-positive duration", r));
    count(i, j) += 1.0;
    duration(i, j) += seconds;
    ++inter;
  }
  if (inter == 0) throw Error(Errc::kEmptyAfterAggregation, "no ride connects two different clusters");

  // Weak components over clusters that carry demand.
  std::vector<int> parent(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) parent[static_cast<std::size_t>(i)] = i;
  const auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  };
  std::vector<bool> touched(static_cast<std::size_t>(k), false);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (count(i, j) > 0.0) {
        touched[static_cast<std::size_t>(i)] = touched[static_cast<std::size_t>(j)] = true;
        const int a = find(i), b = find(j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
    }
  }
  std::map<int, int> sizes;
  for (int i = 0; i < k; ++i) {
    if (touched[static_cast<std::size_t>(i)]) ++sizes[find(i)];
  }
  int root = -1, root_size = 0;
  for (const auto& [r, size] : sizes) {
    if (size > root_size) {
      root = r;
      root_size = size;
    }
  }

  std::vector<int> kept, dropped;
  for (int i = 0; i < k; ++i) {
    (touched[static_cast<std::size_t>(i)] && find(i) == root ? kept : dropped).push_back(i);
  }
  const int m = static_cast<int>(kept.size());
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const int i = kept[static_cast<std::size_t>(a)], j = kept[static_cast<std::size_t>(b)];
      if (count(i, j) > 0.0) {
        theta(a, b) = count(i, j);
        xi(a, b) = duration(i, j) / count(i, j) / slot_seconds;
      }
    }
  }
  return {TrafficNetwork::validate(theta, xi, cost), std::move(kept), std::move(dropped), inter};
}

SynthProfile parse_synth_profile(std::string_view text) {
  if (text == "symmetric") return SynthProfile::kSymmetric;
  if (text == "commuter") return SynthProfile::kCommuter;
  throw Error(Errc::kUsage, fmt::format("unknown profile '{}' (expected symmetric or commuter)", text));
}

std::string_view to_string(SynthProfile profile) {
  return profile == SynthProfile::kSymmetric ? "symmetric" : "commuter";
}

SynthInstance synth_instance(int n, double density, std::uint64_t seed, SynthProfile profile,
                             const SynthOptions& options) {
  if (n < 3) throw Error(Errc::kUsage, fmt::format("synthetic networks need n >= 3, got {}", n));
  if (!(density > 0.0 && density <= 1.0)) throw Error(Errc::kUsage, fmt::format("density must lie in (0, 1], got {}", density));
  if (!(options.willingness_mean > 0.0)) throw Error(Errc::kUsage, "willingness mean must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Vector2d> position(static_cast<std::size_t>(n));
  for (auto& p : position) {
    const double x = unit(rng);
    p = {x, unit(rng)};
  }

  // Spanning tree: each location links to its nearest predecessor.
  Eigen::MatrixXi linked = Eigen::MatrixXi::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < i; ++j) {
      if ((position[static_cast<std::size_t>(i)] - position[static_cast<std::size_t>(j)]).norm() <
          (position[static_cast<std::size_t>(i)] - position[static_cast<std::size_t>(best)]).norm()) {
        best = j;
      }
    }
    linked(i, best) = linked(best, i) = 1;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double draw = unit(rng);
      if (!linked(i, j) && draw < density) linked(i, j) = linked(j, i) = 1;
    }
  }

  const int commercial_count = (n + 2) / 3;
  const auto commercial = [&](int i) { return i < commercial_count; };
  std::uniform_real_distribution<double> demand(1.0, 10.0);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (!linked(i, j)) continue;
      xi(i, j) = xi(j, i) = 1.0 + 3.0 * (position[static_cast<std::size_t>(i)] - position[static_cast<std::size_t>(j)]).norm();
      const double forward = demand(rng);
      const double backward = demand(rng);
      if (profile == SynthProfile::kSymmetric) {
        theta(i, j) = theta(j, i) = forward;
      } else if (commercial(i) == commercial(j)) {
        theta(i, j) = forward;
        theta(j, i) = backward;
      } else {
        const int c = commercial(i) ? i : j;
        const int r = commercial(i) ? j : i;
        theta(c, r) = forward;
        theta(r, c) = 3.0 * forward;
      }
    }
  }

  TrafficNetwork net = TrafficNetwork::validate(theta, xi, options.cost);
  std::exponential_distribution<double> willingness(1.0 / options.willingness_mean);
  AdvertiserCatalog catalog;
  for (const Arc& arc : net.arcs()) catalog.arc_based.push_back({arc.from, arc.to, willingness(rng)});
  for (int k = 0; k < n; ++k) {
    LocationBid bid{k, {}};
    for (int s = 0; s < n; ++s) {
      if (net.arc_index(s, k)) bid.offers.push_back({s, willingness(rng)});
    }
    if (!bid.offers.empty()) catalog.location_based.push_back(std::move(bid));
  }
  std::vector<int> commercial_set;
  if (profile == SynthProfile::kCommuter) {
    for (int i = 0; i < commercial_count; ++i) commercial_set.push_back(i);
  }
  return {std::move(net), std::move(catalog), std::move(commercial_set)};
}

}  // namespace rp
