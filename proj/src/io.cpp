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


#include "rp/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "rp/error.hpp"

namespace rp {

namespace {

using nlohmann::json;

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw Error(Errc::kMalformedInput, fmt::format("{} is not valid JSON: {}", what, e.what()));
  }
}

const json& field(const json& object, const char* key, std::string_view what) {
  if (!object.is_object() || !object.contains(key)) {
    throw Error(Errc::kMalformedInput, fmt::format("{} lacks field '{}'", what, key));
  }
  return object.at(key);
}

double number(const json& value, std::string_view what) {
  if (!value.is_number()) throw Error(Errc::kMalformedInput, fmt::format("{} must be a number", what));
  return value.get<double>();
}

int index(const json& value, std::string_view what) {
  if (!value.is_number_integer()) throw Error(Errc::kMalformedInput, fmt::format("{} must be an integer", what));
  return value.get<int>();
}

const json& array(const json& value, std::string_view what) {
  if (!value.is_array()) throw Error(Errc::kMalformedInput, fmt::format("{} must be an array", what));
  return value;
}

void check_location(int location, int n, std::string_view what) {
  if (location < 0 || location >= n) {
    throw Error(Errc::kMalformedInput, fmt::format("{} location {} is outside 0..{}", what, location, n - 1));
  }
}

}  // namespace

NetworkFile parse_network_json(std::string_view text) {
  const json doc = parse_json(text, "network file");
  const int n = index(field(doc, "n", "network file"), "n");
  if (n < 2) throw Error(Errc::kDimensionMismatch, fmt::format("network needs n >= 2, got {}", n));
  const double cost = number(field(doc, "cost", "network file"), "cost");

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Ones(n, n);
  Eigen::MatrixXd ad = Eigen::MatrixXd::Zero(n, n);
  std::set<std::pair<int, int>> seen;
  for (const json& arc : array(field(doc, "arcs", "network file"), "arcs")) {
    const int from = index(field(arc, "from", "arc"), "arc.from");
    const int to = index(field(arc, "to", "arc"), "arc.to");
    check_location(from, n, "arc");
    check_location(to, n, "arc");
    if (!seen.emplace(from, to).second) {
      throw Error(Errc::kMalformedInput, fmt::format("arc ({},{}) is listed twice", from, to));
    }
    theta(from, to) = number(field(arc, "demand", "arc"), "arc.demand");
    xi(from, to) = number(field(arc, "travel_time", "arc"), "arc.travel_time");
    if (arc.contains("ad_revenue")) ad(from, to) = number(arc.at("ad_revenue"), "arc.ad_revenue");
  }
  std::vector<EmptyRoute> extra;
  if (doc.contains("empty_travel_time")) {
    for (const json& route : array(doc.at("empty_travel_time"), "empty_travel_time")) {
      EmptyRoute r{index(field(route, "from", "empty route"), "empty_travel_time.from"),
                   index(field(route, "to", "empty route"), "empty_travel_time.to"),
                   number(field(route, "travel_time", "empty route"), "empty_travel_time.travel_time")};
      check_location(r.from, n, "empty route");
      check_location(r.to, n, "empty route");
      extra.push_back(r);
    }
  }

  TrafficNetwork net = TrafficNetwork::validate(theta, xi, cost, std::move(extra));
  Eigen::VectorXd values(static_cast<Eigen::Index>(net.arc_count()));
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    values[static_cast<Eigen::Index>(k)] = ad(net.arc(k).from, net.arc(k).to);
  }
  AdRevenueVector ads = AdRevenueVector::from_values(net, std::move(values));
  return {std::move(net), std::move(ads)};
}

NetworkFile read_network_file(const std::string& path) { return parse_network_json(read_text_file(path)); }

std::string network_to_json(const TrafficNetwork& net, const AdRevenueVector* ads) {
  json doc;
  doc["n"] = net.size();
  doc["cost"] = net.unit_cost();
  json arcs = json::array();
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    json arc{{"from", net.arc(k).from},
             {"to", net.arc(k).to},
             {"demand", net.arc_demand(k)},
             {"travel_time", net.arc_travel_time(k)}};
    if (ads) arc["ad_revenue"] = (*ads)[k];
    arcs.push_back(std::move(arc));
  }
  doc["arcs"] = std::move(arcs);
  if (!net.extra_empty_routes().empty()) {
    json routes = json::array();
    for (const EmptyRoute& r : net.extra_empty_routes()) {
      routes.push_back({{"from", r.from}, {"to", r.to}, {"travel_time", r.travel_time}});
    }
    doc["empty_travel_time"] = std::move(routes);
  }
  return doc.dump(2) + "\n";
}

AdRevenueVector parse_ads_json(const TrafficNetwork& net, std::string_view text) {
  const json doc = parse_json(text, "ad revenue file");
  Eigen::VectorXd values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.arc_count()));
  std::set<std::size_t> seen;
  for (const json& entry : array(field(doc, "ad_revenue", "ad revenue file"), "ad_revenue")) {
    const int from = index(field(entry, "from", "ad revenue entry"), "ad_revenue.from");
    const int to = index(field(entry, "to", "ad revenue entry"), "ad_revenue.to");
    check_location(from, net.size(), "ad revenue entry");
    check_location(to, net.size(), "ad revenue entry");
    const auto k = net.arc_index(from, to);
    if (!k) throw Error(Errc::kMalformedInput, fmt::format("ad revenue entry ({},{}) is not an arc", from, to));
    if (!seen.insert(*k).second) {
      throw Error(Errc::kMalformedInput, fmt::format("ad revenue entry ({},{}) is listed twice", from, to));
    }
    values[static_cast<Eigen::Index>(*k)] = number(field(entry, "value", "ad revenue entry"), "ad_revenue.value");
  }
  return AdRevenueVector::from_values(net, std::move(values));
}

AdRevenueVector read_ads_file(const TrafficNetwork& net, const std::string& path) {
  return parse_ads_json(net, read_text_file(path));
}

AdvertiserCatalog parse_catalog_json(std::string_view text) {
  const json doc = parse_json(text, "advertiser file");
  if (!doc.is_object()) throw Error(Errc::kMalformedInput, "advertiser file must be a JSON object");
  AdvertiserCatalog catalog;
  if (doc.contains("arc_based")) {
    for (const json& bid : array(doc.at("arc_based"), "arc_based")) {
      catalog.arc_based.push_back({index(field(bid, "from", "arc-based advertiser"), "arc_based.from"),
                                   index(field(bid, "to", "arc-based advertiser"), "arc_based.to"),
                                   number(field(bid, "b", "arc-based advertiser"), "arc_based.b")});
    }
  }
  if (doc.contains("location_based")) {
    for (const json& bid : array(doc.at("location_based"), "location_based")) {
      LocationBid location{index(field(bid, "location", "location-based advertiser"), "location_based.location"), {}};
      for (const json& offer : array(field(bid, "d", "location-based advertiser"), "location_based.d")) {
        location.offers.push_back({index(field(offer, "from", "location offer"), "location_based.d.from"),
                                   number(field(offer, "value", "location offer"), "location_based.d.value")});
      }
      catalog.location_based.push_back(std::move(location));
    }
  }
  return catalog;
}

AdvertiserCatalog read_catalog_file(const std::string& path) { return parse_catalog_json(read_text_file(path)); }

std::string catalog_to_json(const AdvertiserCatalog& catalog) {
  json arc_based = json::array();
  for (const ArcBid& bid : catalog.arc_based) {
    arc_based.push_back({{"from", bid.from}, {"to", bid.to}, {"b", bid.willingness}});
  }
  json location_based = json::array();
  for (const LocationBid& bid : catalog.location_based) {
    json offers = json::array();
    for (const LocationOffer& offer : bid.offers) offers.push_back({{"from", offer.from}, {"value", offer.willingness}});
    location_based.push_back({{"location", bid.location}, {"d", std::move(offers)}});
  }
  json doc{{"arc_based", std::move(arc_based)}, {"location_based", std::move(location_based)}};
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kMalformedInput, fmt::format("cannot open '{}'", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kUsage, fmt::format("cannot write '{}'", path));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::kUsage, fmt::format("failed writing '{}'", path));
}

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // drops the sign of -0
  return fmt::format("{:.9g}", value);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(std::move(header)); }

CsvWriter& CsvWriter::row(std::vector<std::string> cells) {
  if (cells.size() != columns_) {
    throw Error(Errc::kDimensionMismatch, fmt::format("CSV row has {} cells, expected {}", cells.size(), columns_));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_.push_back(',');
    text_ += cells[i];
  }
  text_.push_back('\n');
  return *this;
}

}  // namespace rp
