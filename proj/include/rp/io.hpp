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

#include <string>
#include <string_view>
#include <vector>

#include "rp/network.hpp"
#include "rp/selection.hpp"

namespace rp {

/*
  File formats.

  Network JSON:
    {"n": 3, "cost": 0.6,
     "arcs": [{"from": 0, "to": 1, "demand": 1, "travel_time": 1, "ad_revenue": 0}],
     "empty_travel_time": [{"from": 1, "to": 0, "travel_time": 2}]}
  Indices are zero-based; `ad_revenue` defaults to 0 and `empty_travel_time`
  is optional.

  Ad revenue JSON:  {"ad_revenue": [{"from": 0, "to": 1, "value": 0.2}]}
  Unlisted arcs get 0.

  Advertiser JSON:
    {"arc_based": [{"from": 0, "to": 1, "b": 0.3}],
     "location_based": [{"location": 2, "d": [{"from": 0, "value": 0.1}]}]}

  All readers throw Errc::kMalformedInput on syntax or schema errors and the
  network's own validation errors otherwise.
*/
struct NetworkFile {
  TrafficNetwork network;
  AdRevenueVector ads;
};

NetworkFile parse_network_json(std::string_view text);
NetworkFile read_network_file(const std::string& path);
std::string network_to_json(const TrafficNetwork& net, const AdRevenueVector* ads = nullptr);

AdRevenueVector parse_ads_json(const TrafficNetwork& net, std::string_view text);
AdRevenueVector read_ads_file(const TrafficNetwork& net, const std::string& path);

AdvertiserCatalog parse_catalog_json(std::string_view text);
AdvertiserCatalog read_catalog_file(const std::string& path);
std::string catalog_to_json(const AdvertiserCatalog& catalog);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Nine significant digits; negative zero prints as 0.
std::string format_number(double value);

// Comma-separated rows with '\n' endings. Cells are written verbatim.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(std::vector<std::string> cells);
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace rp
