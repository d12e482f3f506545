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


#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "rp/electrical.hpp"
#include "rp/error.hpp"
#include "rp/extended.hpp"
#include "rp/ingest.hpp"
#include "rp/io.hpp"
#include "rp/parallel.hpp"
#include "rp/pricing.hpp"
#include "rp/selection.hpp"

namespace rp::cli {

namespace {

using nlohmann::json;

// Value as it appears in 9-significant-digit output; +-inf stays infinite.
double round9(double x) { return std::stod(format_number(x)); }

json rounded(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(round9(v[i]));
  return out;
}

json rounded(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(rounded(Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Bookkeeping for one command: hashed inputs, written outputs and the
// manifest written next to the primary output.
struct Run {
  std::string command;
  json params = json::object();
  std::optional<std::uint64_t> seed;
  json inputs = json::array();
  json outputs = json::array();
  json summary = json::object();
  std::string manifest_base;

  std::string read(const std::string& path) {
    std::string text = read_text_file(path);
    inputs.push_back({{"path", path}, {"sha256", sha256_hex(text)}});
    return text;
  }

  void write(const std::string& path, const std::string& content) {
    write_text_file(path, content);
    outputs.push_back({{"path", path}, {"sha256", sha256_hex(content)}});
  }
};

void write_manifest(const Run& run, const std::vector<std::string>& args, double seconds) {
  if (run.manifest_base.empty()) return;
  json doc{{"command", run.command},
           {"params", run.params},
           {"seed", run.seed ? json(*run.seed) : json(nullptr)},
           {"inputs", run.inputs},
           {"outputs", run.outputs},
           {"summary", run.summary},
           {"version", std::string(version())},
           {"duration_seconds", round9(seconds)},
           {"argv", args}};
  write_text_file(run.manifest_base + ".manifest.json", doc.dump(2) + "\n");
}

NetworkFile load_network(Run& run, const std::string& network_path, const std::string& ads_path) {
  NetworkFile file = parse_network_json(run.read(network_path));
  if (!ads_path.empty()) file.ads = parse_ads_json(file.network, run.read(ads_path));
  return file;
}

AdvertiserMode parse_mode(const std::string& text) {
  if (text == "arc") return AdvertiserMode::kArc;
  if (text == "location") return AdvertiserMode::kLocation;
  throw Error(Errc::kUsage, fmt::format("unknown advertiser mode '{}' (expected arc or location)", text));
}

PricingModel parse_model(const std::string& text) {
  if (text == "basic") return PricingModel::kBasic;
  if (text == "extended") return PricingModel::kExtended;
  throw Error(Errc::kUsage, fmt::format("unknown pricing model '{}' (expected basic or extended)", text));
}

Strategy parse_strategy(const std::string& text) {
  for (Strategy s : {Strategy::kResistance, Strategy::kOptimal, Strategy::kRandom}) {
    if (text == to_string(s)) return s;
  }
  throw Error(Errc::kUsage, fmt::format("unknown strategy '{}' (expected resistance, optimal or random)", text));
}

std::vector<double> parse_numbers(const std::string& text, std::string_view what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(value)) {
      throw Error(Errc::kUsage, fmt::format("{}: '{}' is not a finite number", what, item));
    }
    out.push_back(value);
  }
  return out;
}

// "start:stop:step" (inclusive, values start + i * step) or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::string spec = text;
    std::replace(spec.begin(), spec.end(), ':', ',');
    const std::vector<double> parts = parse_numbers(spec, "grid");
    if (parts.size() != 3) throw Error(Errc::kUsage, fmt::format("grid '{}' must be start:stop:step", text));
    const auto [start, stop, step] = std::tuple{parts[0], parts[1], parts[2]};
    if (!(step > 0.0)) throw Error(Errc::kUsage, fmt::format("grid step must be positive, got {}", step));
    if (stop >= start) {
      const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
      for (std::size_t i = 0; i < count; ++i) {
        grid.push_back(std::stod(fmt::format("{:.12g}", start + static_cast<double>(i) * step)));
      }
    }
  } else if (!text.empty()) {
    grid = parse_numbers(text, "grid");
  }
  if (grid.empty()) throw Error(Errc::kUsage, fmt::format("grid '{}' is empty", text));
  return grid;
}

json electrical_json(const TrafficNetwork& net, const AdRevenueVector& ads, const std::optional<ArcMask>& mask) {
  const ElectricalNetwork electrical = build_electrical(net, mask);
  json components = json::array();
  for (const ElectricalModel& model : electrical.components()) {
    json resistors = json::array();
    for (const Resistor& r : model.resistors) {
      resistors.push_back({{"u", r.u}, {"v", r.v}, {"resistance", round9(r.resistance)}});
    }
    components.push_back({{"nodes", model.nodes},
                          {"resistors", std::move(resistors)},
                          {"laplacian", rounded(model.laplacian)},
                          {"pseudoinverse", rounded(model.pseudoinverse)},
                          {"effective_resistance", rounded(model.effective_resistance)}});
  }
  json masked = json::array();
  if (mask) {
    for (std::size_t k = 0; k < net.arc_count(); ++k) {
      if (!(*mask)[k]) masked.push_back({net.arc(k).from, net.arc(k).to});
    }
  }
  return {{"n", net.size()},
          {"masked_arcs", std::move(masked)},
          {"value_vector", rounded(value_vector(net, ads, mask))},
          {"components", std::move(components)}};
}

// ---- price ---------------------------------------------------------------

struct PriceArgs {
  std::string network, ads, out, dump;
  bool cold_start = false;
  int max_iterations = 0;
};

void cmd_price(Run& run, const PriceArgs& a, std::ostream& out) {
  const NetworkFile file = load_network(run, a.network, a.ads);
  const TrafficNetwork& net = file.network;
  if (a.max_iterations < 0) throw Error(Errc::kUsage, "--max-iterations must be >= 0");
  GeneralSolverOptions options;
  options.interior_warm_start = !a.cold_start;
  options.max_iterations = a.max_iterations;
  run.params = {{"network", a.network}, {"ads", a.ads}, {"warm_start", options.interior_warm_start},
                {"max_iterations", options.max_iterations}, {"kkt_tolerance", options.kkt_tolerance}};

  const PricingSolution sol = solve_general(net, file.ads, options);
  const PayoffBreakdown parts = payoff_and_surplus(net, file.ads, sol.prices);
  CsvWriter csv({"from", "to", "price", "flow", "mu", "payoff_contrib", "cs_contrib"});
  for (std::size_t k = 0; k < net.arc_count(); ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    csv.row({std::to_string(net.arc(k).from), std::to_string(net.arc(k).to), format_number(sol.prices[e]),
             format_number(sol.flows[e]), format_number(sol.mu[e]), format_number(parts.payoff_per_arc[e]),
             format_number(parts.surplus_per_arc[e])});
  }
  run.summary = {{"payoff", round9(sol.payoff)},
                 {"consumer_surplus", round9(sol.consumer_surplus)},
                 {"active_set_size", sol.active_set.size()},
                 {"kkt_residual", round9(sol.kkt_residual)}};
  if (a.out.empty()) {
    out << csv.str();
  } else {
    run.manifest_base = a.out;
    run.write(a.out, csv.str());
    out << fmt::format("payoff {}\nconsumer_surplus {}\nactive_set_size {}\n", format_number(sol.payoff),
                       format_number(sol.consumer_surplus), sol.active_set.size());
  }
  if (!a.dump.empty()) run.write(a.dump, electrical_json(net, file.ads, sol.kept_arcs()).dump(2) + "\n");
}

// ---- dump-electrical -----------------------------------------------------

struct DumpArgs {
  std::string network, ads, out;
};

void cmd_dump(Run& run, const DumpArgs& a, std::ostream& out) {
  const NetworkFile file = load_network(run, a.network, a.ads);
  run.params = {{"network", a.network}, {"ads", a.ads}};
  const std::string text = electrical_json(file.network, file.ads, std::nullopt).dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    run.manifest_base = a.out;
    run.write(a.out, text);
  }
}

// ---- price-extended ------------------------------------------------------

struct ExtendedArgs {
  std::string network, ads, out;
  std::string demand = "uniform";
  double psi = 300.0;
  double eta = 0.8;
  std::uint64_t seed = 0;
};

ExtendedParams extended_params(double psi, double eta, const std::string& demand) {
  ExtendedParams params;
  params.psi = psi;
  params.eta = eta;
  params.demand = DemandModel::parse(demand);
  params.validate();
  return params;
}

void cmd_price_extended(Run& run, const ExtendedArgs& a, std::ostream& out) {
  const NetworkFile file = load_network(run, a.network, a.ads);
  const TrafficNetwork& net = file.network;
  const ExtendedParams params = extended_params(a.psi, a.eta, a.demand);
  run.seed = a.seed;
  run.params = {{"network", a.network}, {"ads", a.ads}, {"psi", a.psi}, {"eta", a.eta},
                {"demand", params.demand.to_string()}};

  const ExtendedSolution sol = solve_extended(net, file.ads, params);
  CsvWriter csv({"from", "to", "price", "served_flow", "empty_flow"});
  for (std::size_t r = 0; r < sol.empty_routes.size(); ++r) {
    const EmptyRoute& route = sol.empty_routes[r];
    const auto e = static_cast<Eigen::Index>(r);
    const bool is_arc = r < net.arc_count();
    csv.row({std::to_string(route.from), std::to_string(route.to), is_arc ? format_number(sol.prices[e]) : "",
             is_arc ? format_number(sol.served_flows[e]) : "", format_number(sol.empty_flows[e])});
  }
  std::string text = csv.str();
  text += fmt::format("# payoff,{}\n# residual,{}\n# local_only,{}\n# capacity_used,{}\n# capacity_dual,{}\n",
                      format_number(sol.payoff), format_number(sol.kkt_residual), sol.local_only ? "true" : "false",
                      format_number(sol.capacity_used), format_number(sol.capacity_dual));
  run.summary = {{"payoff", round9(sol.payoff)},
                 {"residual", round9(sol.kkt_residual)},
                 {"local_only", sol.local_only},
                 {"iterations", sol.iterations}};
  run.manifest_base = a.out;
  run.write(a.out, text);
  out << fmt::format("payoff {}\nresidual {}\nlocal_only {}\n", format_number(sol.payoff),
                     format_number(sol.kkt_residual), sol.local_only ? "true" : "false");
}

// ---- select --------------------------------------------------------------

struct SelectArgs {
  std::string network, advertisers, out, mode;
  std::string strategy = "resistance";
  std::string model = "basic";
  std::string demand = "uniform";
  double psi = 300.0;
  double eta = 0.8;
  int trials = 100;
  std::uint64_t seed = 0;
};

CompareOptions compare_options(AdvertiserMode mode, PricingModel model, const ExtendedParams& params,
                               std::uint64_t seed, int trials) {
  CompareOptions options;
  options.mode = mode;
  options.model = model;
  options.extended = params;
  options.seed = seed;
  options.random_trials = trials;
  return options;
}

void cmd_select(Run& run, const SelectArgs& a, std::ostream& out) {
  const NetworkFile file = load_network(run, a.network, "");
  const AdvertiserCatalog catalog = parse_catalog_json(run.read(a.advertisers));
  const AdvertiserMode mode = parse_mode(a.mode);
  const Strategy strategy = parse_strategy(a.strategy);
  const PricingModel model = parse_model(a.model);
  const ExtendedParams params = extended_params(a.psi, a.eta, a.demand);
  run.seed = a.seed;
  run.params = {{"network", a.network}, {"advertisers", a.advertisers}, {"mode", a.mode},
                {"strategy", a.strategy}, {"model", a.model}, {"random_trials", a.trials}};
  if (model == PricingModel::kExtended) {
    run.params["psi"] = a.psi;
    run.params["eta"] = a.eta;
    run.params["demand"] = params.demand.to_string();
  }

  const StrategyComparison cmp =
      strategy_compare(file.network, catalog, compare_options(mode, model, params, a.seed, a.trials));
  const StrategyRow& row = cmp.row(strategy);
  CsvWriter csv({"candidate", "label", "delta", "payoff", "selected"});
  for (std::size_t i = 0; i < cmp.candidates.size(); ++i) {
    csv.row({std::to_string(i), csv_quote(cmp.candidates[i].label), format_number(cmp.candidate_deltas[i]),
             format_number(cmp.candidate_payoffs[i]), row.chosen == i ? "1" : "0"});
  }
  const std::string chosen = row.chosen ? cmp.candidates[*row.chosen].label : "random";
  std::string text = csv.str();
  text += fmt::format("# strategy,{}\n# chosen,{}\n# payoff,{}\n# gap_to_optimal,{}\n", a.strategy, csv_quote(chosen),
                      format_number(row.payoff), format_number(row.gap_to_optimal));
  run.summary = {{"chosen", chosen}, {"payoff", round9(row.payoff)}, {"gap_to_optimal", round9(row.gap_to_optimal)}};
  run.manifest_base = a.out;
  run.write(a.out, text);
  out << fmt::format("chosen {}\npayoff {}\ngap_to_optimal {}\n", chosen, format_number(row.payoff),
                     format_number(row.gap_to_optimal));
}

// ---- sweeps --------------------------------------------------------------

struct SweepArgs {
  std::string network, advertisers, out, grid;
  std::string mode = "location";
  std::string demand = "uniform";
  double fixed = 0.0;  // eta for the psi sweep, psi for the eta sweep
  int trials = 100;
  std::uint64_t seed = 0;
};

void cmd_sweep(Run& run, const SweepArgs& a, bool over_psi, std::ostream& out) {
  const NetworkFile file = load_network(run, a.network, "");
  const AdvertiserCatalog catalog = parse_catalog_json(run.read(a.advertisers));
  const AdvertiserMode mode = parse_mode(a.mode);
  const std::vector<double> grid = parse_grid(a.grid);
  const char* axis = over_psi ? "psi" : "eta";
  const char* fixed_name = over_psi ? "eta" : "psi";
  const ExtendedParams base =
      over_psi ? extended_params(grid.front(), a.fixed, a.demand) : extended_params(a.fixed, grid.front(), a.demand);
  run.seed = a.seed;
  run.params = {{"network", a.network}, {"advertisers", a.advertisers}, {"mode", a.mode},
                {"grid", grid}, {fixed_name, a.fixed}, {"demand", base.demand.to_string()},
                {"random_trials", a.trials}};

  const auto comparisons = parallel_map(grid.size(), [&](std::size_t g) {
    ExtendedParams params = base;
    (over_psi ? params.psi : params.eta) = grid[g];
    params.validate();
    return strategy_compare(file.network, catalog,
                            compare_options(mode, PricingModel::kExtended, params, a.seed, a.trials));
  });
  CsvWriter csv({axis, "strategy", "payoff", "gap_to_optimal"});
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (const StrategyRow& row : comparisons[g].rows) {
      csv.row({format_number(grid[g]), std::string(to_string(row.strategy)), format_number(row.payoff),
               format_number(row.gap_to_optimal)});
    }
  }
  run.summary = {{"points", grid.size()}};
  run.manifest_base = a.out;
  run.write(a.out, csv.str());
  out << fmt::format("{} points written to {}\n", grid.size(), a.out);
}

// ---- ingest / synth ------------------------------------------------------

struct IngestArgs {
  std::string rides, bbox, window, out;
  int k = 15;
  double slot_seconds = 600.0;
  double cost = 0.6;
  std::uint64_t seed = 0;
};

void cmd_ingest(Run& run, const IngestArgs& a, std::ostream& out) {
  const std::vector<double> box = parse_numbers(a.bbox, "--bbox");
  if (box.size() != 4 || !(box[0] < box[1]) || !(box[2] < box[3])) {
    throw Error(Errc::kUsage, "--bbox must be lat0,lat1,lon0,lon1 with lat0 < lat1 and lon0 < lon1");
  }
  const std::vector<double> window = parse_numbers(a.window, "--window");
  if (window.size() != 2 || !(window[0] < window[1])) throw Error(Errc::kUsage, "--window must be t0,t1 with t0 < t1");
  if (!(a.slot_seconds > 0.0)) throw Error(Errc::kUsage, "--slot-seconds must be positive");
  const BoundingBox bounds{box[0], box[1], box[2], box[3]};
  run.seed = a.seed;
  run.params = {{"rides", a.rides}, {"bbox", box}, {"window", window}, {"k", a.k},
                {"slot_seconds", a.slot_seconds}, {"cost", a.cost}};

  std::istringstream text(run.read(a.rides));
  const std::vector<RideRecord> rides = read_rides_csv(text);
  const std::vector<RideRecord> kept = filter_rides(rides, bounds, {window[0], window[1]});
  const ClusteringResult clusters = cluster_endpoints(kept, a.k, bounds, a.seed);
  const AggregationResult agg = aggregate_network(kept, clusters, a.slot_seconds, a.cost);

  json centroids = json::array();
  for (int c : agg.kept_clusters) {
    centroids.push_back({round9(clusters.centroids(c, 0)), round9(clusters.centroids(c, 1))});
  }
  run.summary = {{"rides_read", rides.size()},
                 {"rides_kept", kept.size()},
                 {"inter_cluster_rides", agg.inter_cluster_rides},
                 {"locations", agg.network.size()},
                 {"arcs", agg.network.arc_count()},
                 {"kept_clusters", agg.kept_clusters},
                 {"dropped_clusters", agg.dropped_clusters},
                 {"location_centroids", std::move(centroids)},
                 {"inertia", round9(clusters.inertia)}};
  run.manifest_base = a.out;
  run.write(a.out, network_to_json(agg.network));
  out << fmt::format("rides {} kept {} locations {} arcs {} dropped_clusters {}\n", rides.size(), kept.size(),
                     agg.network.size(), agg.network.arc_count(), agg.dropped_clusters.size());
}

struct SynthArgs {
  std::string out, advertisers_out;
  std::string profile = "commuter";
  int n = 15;
  double density = 0.3;
  double cost = 0.6;
  double willingness_mean = 0.4;
  std::uint64_t seed = 0;
};

std::string sibling_path(const std::string& path, std::string_view suffix) {
  const std::string stem = path.size() > 5 && path.ends_with(".json") ? path.substr(0, path.size() - 5) : path;
  return stem + std::string(suffix);
}

void cmd_synth(Run& run, const SynthArgs& a, std::ostream& out) {
  const SynthProfile profile = parse_synth_profile(a.profile);
  const std::string advertisers = a.advertisers_out.empty() ? sibling_path(a.out, ".advertisers.json")
                                                            : a.advertisers_out;
  run.seed = a.seed;
  run.params = {{"n", a.n}, {"density", a.density}, {"profile", std::string(to_string(profile))},
                {"cost", a.cost}, {"willingness_mean", a.willingness_mean}, {"advertisers_out", advertisers}};
  const SynthInstance inst = synth_instance(a.n, a.density, a.seed, profile, {a.cost, a.willingness_mean});
  run.summary = {{"arcs", inst.network.arc_count()}, {"commercial", inst.commercial}};
  run.manifest_base = a.out;
  run.write(a.out, network_to_json(inst.network));
  run.write(advertisers, catalog_to_json(inst.catalog));
  out << fmt::format("locations {} arcs {}\n", inst.network.size(), inst.network.arc_count());
}

// ---- report --------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cells.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back().push_back(c);
    }
  }
  if (quoted) throw Error(Errc::kMalformedInput, fmt::format("unterminated quote in '{}'", line));
  return cells;
}

// A solver output: header, rows and "# key,value" footer entries.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::string> footer;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::kMalformedInput, fmt::format("report input lacks column '{}'", name));
    return static_cast<std::size_t>(it - header.begin());
  }

  double number(std::size_t row, const std::string& name) const {
    const std::string& cell = rows[row][column(name)];
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) {
      throw Error(Errc::kMalformedInput, fmt::format("row {}: {} '{}' is not a number", row + 2, name, cell));
    }
    return value;
  }
};

Table parse_table(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const std::vector<std::string> cells = split_csv_line(line.substr(2));
      if (cells.size() != 2) throw Error(Errc::kMalformedInput, fmt::format("bad footer line '{}'", line));
      table.footer[cells[0]] = cells[1];
    } else if (table.header.empty()) {
      table.header = split_csv_line(line);
    } else {
      table.rows.push_back(split_csv_line(line));
      if (table.rows.back().size() != table.header.size()) {
        throw Error(Errc::kMalformedInput, fmt::format("row {} has {} cells, header has {}", table.rows.size() + 1,
                                                       table.rows.back().size(), table.header.size()));
      }
    }
  }
  if (table.header.empty()) throw Error(Errc::kMalformedInput, "report input is empty");
  return table;
}

std::string series(const std::vector<std::pair<double, double>>& points) {
  CsvWriter csv({"x", "y"});
  for (const auto& [x, y] : points) csv.row({format_number(x), format_number(y)});
  return csv.str();
}

struct ReportArgs {
  std::string input, out;
};

void report_prices(Run& run, const Table& t, const std::string& prefix, std::ostream& out) {
  double payoff = 0.0, surplus = 0.0;
  std::size_t active = 0;
  std::vector<std::pair<double, double>> prices, contributions;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    payoff += t.number(r, "payoff_contrib");
    surplus += t.number(r, "cs_contrib");
    if (t.number(r, "mu") > 0.0) ++active;
    prices.emplace_back(static_cast<double>(r), t.number(r, "price"));
    contributions.emplace_back(static_cast<double>(r), t.number(r, "payoff_contrib"));
  }
  std::vector<std::size_t> order(t.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return t.number(x, "payoff_contrib") > t.number(y, "payoff_contrib");
  });
  const double ratio = surplus == 0.0 ? std::nan("") : payoff / surplus;
  out << fmt::format("payoff {}\nconsumer_surplus {}\nratio {}\nactive_set_size {}\ntop_arcs\n", format_number(payoff),
                     format_number(surplus), format_number(ratio), active);
  json top = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
    const auto& row = t.rows[order[i]];
    const std::string label = fmt::format("({},{})", row[t.column("from")], row[t.column("to")]);
    out << fmt::format("  {} {}\n", label, format_number(t.number(order[i], "payoff_contrib")));
    top.push_back(label);
  }
  run.summary = {{"kind", "prices"}, {"payoff", round9(payoff)}, {"consumer_surplus", round9(surplus)},
                 {"active_set_size", active}, {"top_arcs", top}};
  if (std::isfinite(ratio)) run.summary["ratio"] = round9(ratio);
  if (!prefix.empty()) {
    run.write(prefix + ".price.csv", series(prices));
    run.write(prefix + ".payoff_contrib.csv", series(contributions));
  }
}

void report_extended(Run& run, const Table& t, const std::string& prefix, std::ostream& out) {
  for (const char* key : {"payoff", "residual", "local_only"}) {
    if (!t.footer.count(key)) throw Error(Errc::kMalformedInput, fmt::format("extended output lacks '# {}'", key));
  }
  double served = 0.0, empty = 0.0;
  std::vector<std::pair<double, double>> prices, empties;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    empty += t.number(r, "empty_flow");
    empties.emplace_back(static_cast<double>(r), t.number(r, "empty_flow"));
    if (!t.rows[r][t.column("price")].empty()) {
      served += t.number(r, "served_flow");
      prices.emplace_back(static_cast<double>(r), t.number(r, "price"));
    }
  }
  out << fmt::format("payoff {}\nresidual {}\nlocal_only {}\nserved_flow {}\nempty_flow {}\n", t.footer.at("payoff"),
                     t.footer.at("residual"), t.footer.at("local_only"), format_number(served), format_number(empty));
  run.summary = {{"kind", "extended"}, {"payoff", t.footer.at("payoff")}, {"served_flow", round9(served)},
                 {"empty_flow", round9(empty)}};
  if (!prefix.empty()) {
    run.write(prefix + ".price.csv", series(prices));
    run.write(prefix + ".empty_flow.csv", series(empties));
  }
}

void report_sweep(Run& run, const Table& t, const std::string& axis, const std::string& prefix, std::ostream& out) {
  std::vector<std::string> strategies;
  std::map<std::string, std::vector<std::pair<double, double>>> by_strategy;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& s = t.rows[r][t.column("strategy")];
    if (!by_strategy.count(s)) strategies.push_back(s);
    by_strategy[s].emplace_back(t.number(r, axis), t.number(r, "payoff"));
  }
  out << fmt::format("sweep over {}: {} rows\n", axis, t.rows.size());
  json summary = json::object();
  for (const std::string& s : strategies) {
    const auto& points = by_strategy[s];
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                              [](const auto& x, const auto& y) { return x.second < y.second; });
    out << fmt::format("  {} points {} min_payoff {} max_payoff {}\n", s, points.size(), format_number(lo->second),
                       format_number(hi->second));
    summary[s] = {{"min_payoff", round9(lo->second)}, {"max_payoff", round9(hi->second)}};
    if (!prefix.empty()) run.write(fmt::format("{}.{}.csv", prefix, s), series(points));
  }
  run.summary = {{"kind", "sweep"}, {"axis", axis}, {"strategies", summary}};
}

void report_select(Run& run, const Table& t, const std::string& prefix, std::ostream& out) {
  std::vector<std::pair<double, double>> payoffs;
  for (std::size_t r = 0; r < t.rows.size(); ++r) payoffs.emplace_back(t.number(r, "candidate"), t.number(r, "payoff"));
  const auto get = [&](const char* key) { return t.footer.count(key) ? t.footer.at(key) : std::string("?"); };
  out << fmt::format("candidates {}\nstrategy {}\nchosen {}\npayoff {}\ngap_to_optimal {}\n", t.rows.size(),
                     get("strategy"), get("chosen"), get("payoff"), get("gap_to_optimal"));
  run.summary = {{"kind", "select"}, {"candidates", t.rows.size()}, {"chosen", get("chosen")}};
  if (!prefix.empty()) run.write(prefix + ".payoff.csv", series(payoffs));
}

void cmd_report(Run& run, const ReportArgs& a, std::ostream& out) {
  const Table t = parse_table(run.read(a.input));
  run.params = {{"input", a.input}};
  run.manifest_base = a.out;
  const auto has = [&](const char* name) { return std::find(t.header.begin(), t.header.end(), name) != t.header.end(); };
  if (has("payoff_contrib") && has("cs_contrib")) {
    report_prices(run, t, a.out, out);
  } else if (has("served_flow") && has("empty_flow")) {
    report_extended(run, t, a.out, out);
  } else if ((t.header[0] == "psi" || t.header[0] == "eta") && has("strategy") && has("payoff")) {
    report_sweep(run, t, t.header[0], a.out, out);
  } else if (has("candidate") && has("payoff")) {
    report_select(run, t, a.out, out);
  } else {
    throw Error(Errc::kMalformedInput, fmt::format("'{}' is not a recognized solver output", a.input));
  }
}

int exit_code(Errc code) { return code == Errc::kNoConvergence ? 3 : 2; }

}  // namespace

std::string_view version() { return RP_VERSION; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ride-hailing origin-destination pricing with in-vehicle ad revenue", "resistive-pricing"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  PriceArgs price;
  auto* price_cmd = app.add_subcommand("price", "Optimal prices of the basic model");
  price_cmd->add_option("--network", price.network, "Network JSON")->required();
  price_cmd->add_option("--ads", price.ads, "Ad revenue JSON (replaces ad_revenue in the network file)");
  price_cmd->add_option("--out", price.out, "prices.csv (stdout when omitted)");
  price_cmd->add_option("--dump-electrical", price.dump, "Also write the electrical network behind the prices");
  price_cmd->add_flag("--cold-start", price.cold_start, "Start the active-set loop from the empty set");
  price_cmd->add_option("--max-iterations", price.max_iterations, "Active-set iteration cap (0: 4 * arcs, at least 10)")
      ->capture_default_str();

  ExtendedArgs ext;
  auto* ext_cmd = app.add_subcommand("price-extended", "Prices with empty-vehicle routing and fleet capacity");
  ext_cmd->add_option("--network", ext.network, "Network JSON")->required();
  ext_cmd->add_option("--ads", ext.ads, "Ad revenue JSON");
  ext_cmd->add_option("--psi", ext.psi, "Fleet capacity")->capture_default_str();
  ext_cmd->add_option("--eta", ext.eta, "Empty-to-full cost ratio")->capture_default_str();
  ext_cmd->add_option("--demand", ext.demand, "uniform or exp:<gamma>")->capture_default_str();
  ext_cmd->add_option("--seed", ext.seed, "Run seed")->required();
  ext_cmd->add_option("--out", ext.out, "ext.csv")->required();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Choose one collaborating advertiser");
  sel_cmd->add_option("--network", sel.network, "Network JSON")->required();
  sel_cmd->add_option("--advertisers", sel.advertisers, "Advertiser JSON")->required();
  sel_cmd->add_option("--mode", sel.mode, "arc or location")->required();
  sel_cmd->add_option("--strategy", sel.strategy, "resistance, optimal or random")->capture_default_str();
  sel_cmd->add_option("--model", sel.model, "basic or extended")->capture_default_str();
  sel_cmd->add_option("--psi", sel.psi, "Fleet capacity (extended model)")->capture_default_str();
  sel_cmd->add_option("--eta", sel.eta, "Empty-to-full cost ratio (extended model)")->capture_default_str();
  sel_cmd->add_option("--demand", sel.demand, "uniform or exp:<gamma> (extended model)")->capture_default_str();
  sel_cmd->add_option("--trials", sel.trials, "Draws averaged by the random strategy")->capture_default_str();
  sel_cmd->add_option("--seed", sel.seed, "Seed of the random strategy")->required();
  sel_cmd->add_option("--out", sel.out, "table.csv")->required();

  IngestArgs ing;
  auto* ing_cmd = app.add_subcommand("ingest", "Build a network from ride records");
  ing_cmd->add_option("--rides", ing.rides, "Ride CSV")->required();
  ing_cmd->add_option("--bbox", ing.bbox, "lat0,lat1,lon0,lon1")->required();
  ing_cmd->add_option("--window", ing.window, "t0,t1 (pickup time, epoch seconds)")->required();
  ing_cmd->add_option("--k", ing.k, "Number of locations")->capture_default_str();
  ing_cmd->add_option("--slot-seconds", ing.slot_seconds, "Seconds per time slot")->capture_default_str();
  ing_cmd->add_option("--cost", ing.cost, "Unit operation cost c")->capture_default_str();
  ing_cmd->add_option("--seed", ing.seed, "k-means seed")->required();
  ing_cmd->add_option("--out", ing.out, "network.json")->required();

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "Generate a random network and advertiser catalog");
  syn_cmd->add_option("--n", syn.n, "Number of locations")->capture_default_str();
  syn_cmd->add_option("--density", syn.density, "Extra edge probability")->capture_default_str();
  syn_cmd->add_option("--profile", syn.profile, "symmetric or commuter")->capture_default_str();
  syn_cmd->add_option("--cost", syn.cost, "Unit operation cost c")->capture_default_str();
  syn_cmd->add_option("--willingness-mean", syn.willingness_mean, "Mean advertiser willingness")->capture_default_str();
  syn_cmd->add_option("--seed", syn.seed, "Generator seed")->required();
  syn_cmd->add_option("--out", syn.out, "network.json")->required();
  syn_cmd->add_option("--advertisers-out", syn.advertisers_out, "Advertiser JSON (default <out>.advertisers.json)");

  SweepArgs psi, eta;
  psi.grid = "40:280:40";
  psi.fixed = 0.8;
  eta.grid = "0.1:1.0:0.1";
  eta.fixed = 300.0;
  auto* psi_cmd = app.add_subcommand("sweep-psi", "Strategy payoffs across fleet capacities");
  auto* eta_cmd = app.add_subcommand("sweep-eta", "Strategy payoffs across empty-to-full cost ratios");
  for (auto [cmd, args, fixed] : {std::tuple{psi_cmd, &psi, "--eta"}, std::tuple{eta_cmd, &eta, "--psi"}}) {
    cmd->add_option("--network", args->network, "Network JSON")->required();
    cmd->add_option("--advertisers", args->advertisers, "Advertiser JSON")->required();
    cmd->add_option("--mode", args->mode, "arc or location")->capture_default_str();
    cmd->add_option("--grid", args->grid, "start:stop:step or a comma list")->capture_default_str();
    cmd->add_option(fixed, args->fixed, "Value held fixed")->capture_default_str();
    cmd->add_option("--demand", args->demand, "uniform or exp:<gamma>")->capture_default_str();
    cmd->add_option("--trials", args->trials, "Draws averaged by the random strategy")->capture_default_str();
    cmd->add_option("--seed", args->seed, "Seed of the random strategy")->required();
    cmd->add_option("--out", args->out, "Sweep CSV")->required();
  }

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Summarize a solver output and write plot series");
  rep_cmd->add_option("--input", rep.input, "Output of price, price-extended, select or a sweep")->required();
  rep_cmd->add_option("--out", rep.out, "Prefix of the x,y series files");

  DumpArgs dump;
  auto* dump_cmd = app.add_subcommand("dump-electrical", "Laplacian, pseudoinverse and effective resistances");
  dump_cmd->add_option("--network", dump.network, "Network JSON")->required();
  dump_cmd->add_option("--ads", dump.ads, "Ad revenue JSON");
  dump_cmd->add_option("--out", dump.out, "JSON output (stdout when omitted)");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  Run run;
  try {
    CLI::App* cmd = app.get_subcommands().front();
    run.command = cmd->get_name();
    if (cmd == price_cmd) cmd_price(run, price, out);
    if (cmd == ext_cmd) cmd_price_extended(run, ext, out);
    if (cmd == sel_cmd) cmd_select(run, sel, out);
    if (cmd == ing_cmd) cmd_ingest(run, ing, out);
    if (cmd == syn_cmd) cmd_synth(run, syn, out);
    if (cmd == psi_cmd) cmd_sweep(run, psi, true, out);
    if (cmd == eta_cmd) cmd_sweep(run, eta, false, out);
    if (cmd == rep_cmd) cmd_report(run, rep, out);
    if (cmd == dump_cmd) cmd_dump(run, dump, out);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    write_manifest(run, args, elapsed.count());
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  json doc;
  try {
    doc = json::parse(read_text_file(manifest_path));
    std::vector<std::string> args = doc.at("argv").get<std::vector<std::string>>();
    for (const json& input : doc.at("inputs")) {
      const std::string path = input.at("path").get<std::string>();
      if (sha256_hex(read_text_file(path)) != input.at("sha256").get<std::string>()) {
        throw Error(Errc::kMalformedInput, fmt::format("input '{}' changed since the manifest was written", path));
      }
    }
    return run(args, out, err);
  } catch (const json::exception& e) {
    throw Error(Errc::kMalformedInput, fmt::format("manifest '{}' is malformed: {}", manifest_path, e.what()));
  }
}

}  // namespace rp::cli
