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


#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/pricing.hpp"

using namespace rp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "resistive-pricing");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory under the test working directory.
std::string scratch(const std::string& name) {
  const fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string() + "/";
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
  return out;
}

// Value printed after `key ` in a report.
std::string field(const std::string& report, const std::string& key) {
  for (const std::string& line : lines(report)) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  FAIL("report lacks " << key);
  return "";
}

class ThreadEnv {
 public:
  explicit ThreadEnv(const char* value) { setenv("RESISTIVE_PRICING_THREADS", value, 1); }
  ~ThreadEnv() { unsetenv("RESISTIVE_PRICING_THREADS"); }
};

// Synthetic commuter instance written to `dir`; returns the network path.
std::string synth(const std::string& dir, int n, std::uint64_t seed) {
  const std::string path = dir + "net.json";
  const Outcome r = invoke({"synth", "--n", std::to_string(n), "--density", "0.3", "--profile", "commuter", "--seed",
                         std::to_string(seed), "--out", path});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("price writes the documented columns and a manifest") {
  const std::string dir = scratch("price");
  write_text_file(dir + "ring.json", network_to_json(fixtures::ring_with_chord()));
  const Outcome r = invoke({"price", "--network", dir + "ring.json", "--out", dir + "prices.csv", "--dump-electrical",
                         dir + "el.json"});
  REQUIRE(r.code == 0);
  const auto rows = lines(read_text_file(dir + "prices.csv"));
  CHECK(rows[0] == "from,to,price,flow,mu,payoff_contrib,cs_contrib");
  CHECK(rows.size() == 15);
  const std::string text = read_text_file(dir + "prices.csv");
  CHECK(text.find('\r') == std::string::npos);

  const json manifest = json::parse(read_text_file(dir + "prices.csv.manifest.json"));
  CHECK(manifest["command"] == "price");
  CHECK(manifest["seed"].is_null());
  CHECK(manifest["version"] == std::string(cli::version()));
  CHECK(manifest["inputs"][0]["sha256"] == cli::sha256_hex(read_text_file(dir + "ring.json")));
  CHECK(manifest["outputs"][0]["sha256"] == cli::sha256_hex(text));
  CHECK(manifest["argv"][1] == "price");
  CHECK(manifest["duration_seconds"].get<double>() >= 0.0);
  CHECK(manifest["params"].contains("warm_start"));

  // The dumped electrical network is the unmasked ring: R between the chord
  // endpoints is 0.3 and 11/30 across every other edge.
  const json el = json::parse(read_text_file(dir + "el.json"));
  REQUIRE(el["components"].size() == 1);
  const json& R = el["components"][0]["effective_resistance"];
  CHECK(R[1][4].get<double>() == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(R[0][1].get<double>() == doctest::Approx(11.0 / 30.0).epsilon(1e-8));
  CHECK(el["masked_arcs"].empty());

  const Outcome dump = invoke({"dump-electrical", "--network", dir + "ring.json"});
  REQUIRE(dump.code == 0);
  CHECK(json::parse(dump.out)["components"][0]["effective_resistance"] == R);

  const Outcome to_stdout = invoke({"price", "--network", dir + "ring.json"});
  REQUIRE(to_stdout.code == 0);
  CHECK(to_stdout.out == text);
}

TEST_CASE("report on pricing outputs") {
  const std::string dir = scratch("report");
  const std::string net = synth(dir, 12, 5);
  REQUIRE(invoke({"price", "--network", net, "--out", dir + "prices.csv"}).code == 0);
  const Outcome r = invoke({"report", "--input", dir + "prices.csv", "--out", dir + "rep"});
  REQUIRE(r.code == 0);
  CHECK(std::stod(field(r.out, "ratio")) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.out.find("top_arcs") != std::string::npos);
  CHECK(lines(read_text_file(dir + "rep.price.csv"))[0] == "x,y");
  CHECK(fs::exists(dir + "rep.manifest.json"));

  // Top contributions appear in descending order.
  std::vector<double> top;
  bool in_top = false;
  for (const std::string& line : lines(r.out)) {
    if (in_top) top.push_back(std::stod(line.substr(line.rfind(' ') + 1)));
    if (line == "top_arcs") in_top = true;
  }
  CHECK(top.size() == 5);
  CHECK(std::is_sorted(top.rbegin(), top.rend()));

  SUBCASE("all prices at the cap give zero payoff and surplus") {
    write_text_file(dir + "ones.csv",
                    "from,to,price,flow,mu,payoff_contrib,cs_contrib\n0,1,1,0,0.5,0,0\n1,0,1,0,0.2,0,0\n");
    const Outcome ones = invoke({"report", "--input", dir + "ones.csv"});
    REQUIRE(ones.code == 0);
    CHECK(field(ones.out, "payoff") == "0");
    CHECK(field(ones.out, "consumer_surplus") == "0");
    CHECK(field(ones.out, "active_set_size") == "2");
  }
  SUBCASE("missing or unrecognized input") {
    const Outcome missing = invoke({"report", "--input", dir + "absent.csv"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("MalformedInput") != std::string::npos);
    write_text_file(dir + "junk.csv", "a,b\n1,2\n");
    CHECK(invoke({"report", "--input", dir + "junk.csv"}).code == 2);
  }
}

TEST_CASE("price-extended output and footer") {
  const std::string dir = scratch("extended");
  const std::string net = synth(dir, 8, 2);
  for (const char* demand : {"uniform", "exp:2"}) {
    const Outcome r = invoke({"price-extended", "--network", net, "--psi", "50", "--eta", "0.8", "--demand", demand,
                           "--seed", "7", "--out", dir + "ext.csv"});
    REQUIRE(r.code == 0);
    const auto rows = lines(read_text_file(dir + "ext.csv"));
    CHECK(rows[0] == "from,to,price,served_flow,empty_flow");
    CHECK(rows[rows.size() - 5].rfind("# payoff,", 0) == 0);
    CHECK(rows[rows.size() - 4].rfind("# residual,", 0) == 0);
    CHECK(rows[rows.size() - 3] == "# local_only,false");
    const json manifest = json::parse(read_text_file(dir + "ext.csv.manifest.json"));
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["params"]["demand"] == demand);
    const Outcome rep = invoke({"report", "--input", dir + "ext.csv"});
    REQUIRE(rep.code == 0);
    CHECK(field(rep.out, "local_only") == "false");
  }
  CHECK(invoke({"price-extended", "--network", net, "--out", dir + "x.csv"}).code == 2);  // no seed
  CHECK(invoke({"price-extended", "--network", net, "--seed", "1", "--demand", "exp:-1", "--out", dir + "x.csv"}).code ==
        2);
  CHECK(invoke({"price-extended", "--network", net, "--seed", "1", "--psi", "0", "--out", dir + "x.csv"}).code == 2);
}

TEST_CASE("select table") {
  const std::string dir = scratch("select");
  const std::string net = synth(dir, 10, 4);
  const std::string ads = dir + "net.advertisers.json";
  std::map<std::string, double> payoff;
  for (const char* strategy : {"resistance", "optimal", "random"}) {
    const Outcome r = invoke({"select", "--network", net, "--advertisers", ads, "--mode", "location", "--strategy",
                           strategy, "--seed", "3", "--out", dir + "sel.csv"});
    REQUIRE(r.code == 0);
    const auto rows = lines(read_text_file(dir + "sel.csv"));
    CHECK(rows[0] == "candidate,label,delta,payoff,selected");
    CHECK(rows[1].rfind("0,location 0,", 0) == 0);
    payoff[strategy] = std::stod(field(r.out, "payoff"));
  }
  CHECK(payoff["optimal"] >= payoff["resistance"]);
  CHECK(payoff["optimal"] >= payoff["random"]);

  const Outcome arc = invoke({"select", "--network", net, "--advertisers", ads, "--mode", "arc", "--strategy", "optimal",
                           "--model", "extended", "--psi", "40", "--seed", "3", "--out", dir + "arc.csv"});
  REQUIRE(arc.code == 0);
  CHECK(read_text_file(dir + "arc.csv").find("\"(") != std::string::npos);  // arc labels are quoted
  const Outcome rep = invoke({"report", "--input", dir + "arc.csv"});
  REQUIRE(rep.code == 0);
  CHECK(field(rep.out, "gap_to_optimal") == "0");

  CHECK(invoke({"select", "--network", net, "--advertisers", ads, "--mode", "location", "--out", dir + "x.csv"}).code ==
        2);
  CHECK(invoke({"select", "--network", net, "--advertisers", ads, "--mode", "nowhere", "--seed", "1", "--out",
             dir + "x.csv"})
            .code == 2);
  CHECK(invoke({"select", "--network", net, "--advertisers", ads, "--mode", "arc", "--strategy", "best", "--seed", "1",
             "--out", dir + "x.csv"})
            .code == 2);
}

TEST_CASE("sweeps") {
  const std::string dir = scratch("sweeps");
  const std::string net = synth(dir, 10, 9);
  const std::string ads = dir + "net.advertisers.json";

  const Outcome psi = invoke({"sweep-psi", "--network", net, "--advertisers", ads, "--seed", "1", "--out", dir + "psi.csv"});
  REQUIRE(psi.code == 0);
  auto rows = lines(read_text_file(dir + "psi.csv"));
  CHECK(rows[0] == "psi,strategy,payoff,gap_to_optimal");
  REQUIRE(rows.size() == 1 + 7 * 3);
  CHECK(rows[1].rfind("40,resistance,", 0) == 0);
  CHECK(rows[21].rfind("280,random,", 0) == 0);
  CHECK(fs::exists(dir + "psi.csv.manifest.json"));
  std::map<std::string, std::vector<double>> by_strategy;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = cells(rows[i]);
    CHECK(std::stod(c[3]) >= 0.0);
    by_strategy[c[1]].push_back(std::stod(c[2]));
  }
  for (const auto& [name, values] : by_strategy) {
    for (std::size_t g = 1; g < values.size(); ++g) CHECK(values[g] >= values[g - 1] - 1e-6);
  }

  const Outcome single = invoke({"sweep-psi", "--network", net, "--advertisers", ads, "--grid", "120", "--seed", "1",
                              "--out", dir + "one.csv"});
  REQUIRE(single.code == 0);
  CHECK(lines(read_text_file(dir + "one.csv")).size() == 4);

  const Outcome eta = invoke({"sweep-eta", "--network", net, "--advertisers", ads, "--seed", "1", "--out", dir + "eta.csv"});
  REQUIRE(eta.code == 0);
  rows = lines(read_text_file(dir + "eta.csv"));
  REQUIRE(rows.size() == 1 + 10 * 3);
  CHECK(rows[1].rfind("0.1,resistance,", 0) == 0);
  CHECK(rows[28].rfind("1,resistance,", 0) == 0);
  by_strategy.clear();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = cells(rows[i]);
    CHECK(std::stod(c[3]) >= 0.0);
    by_strategy[c[1]].push_back(std::stod(c[2]));
  }
  for (const auto& [name, values] : by_strategy) {
    for (std::size_t g = 1; g < values.size(); ++g) CHECK(values[g] <= values[g - 1] + 1e-6);
  }
  const Outcome rep = invoke({"report", "--input", dir + "eta.csv", "--out", dir + "eta_series"});
  REQUIRE(rep.code == 0);
  CHECK(lines(read_text_file(dir + "eta_series.optimal.csv")).size() == 11);

  for (const char* grid : {"", "1:0:0.1", "0.1:1:0", "a,b"}) {
    const Outcome bad = invoke({"sweep-eta", "--network", net, "--advertisers", ads, "--grid", grid, "--seed", "1",
                             "--out", dir + "bad.csv"});
    CHECK(bad.code == 2);
  }
  CHECK(invoke({"sweep-psi", "--network", net, "--advertisers", ads, "--out", dir + "bad.csv"}).code == 2);
}

TEST_CASE("ingest builds a network from rides") {
  const std::string dir = scratch("ingest");
  std::mt19937_64 rng(2);
  std::normal_distribution<double> jitter(0.0, 0.0004);
  const std::vector<std::pair<double, double>> hubs{{30.655, 104.04}, {30.67, 104.06}, {30.685, 104.045}};
  std::uniform_int_distribution<std::size_t> pick(0, hubs.size() - 1);
  std::string csv = "pickup_time,dropoff_time,pickup_lon,pickup_lat,dropoff_lon,dropoff_lat\n";
  for (int r = 0; r < 300; ++r) {
    const auto a = hubs[pick(rng)];
    const auto b = hubs[pick(rng)];
    csv += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", 100 * r, 100 * r + 900, a.second + jitter(rng),
                       a.first + jitter(rng), b.second + jitter(rng), b.first + jitter(rng));
  }
  write_text_file(dir + "rides.csv", csv);
  const std::vector<std::string> args{"ingest", "--rides", dir + "rides.csv", "--bbox", "30.65,30.69,104.03,104.08",
                                      "--window", "0,30000", "--k", "3", "--slot-seconds", "600", "--cost", "0.6",
                                      "--seed", "11", "--out", dir + "network.json"};
  REQUIRE(invoke(args).code == 0);
  const NetworkFile file = read_network_file(dir + "network.json");
  CHECK(file.network.size() == 3);
  for (std::size_t k = 0; k < file.network.arc_count(); ++k) {
    CHECK(file.network.arc_travel_time(k) == doctest::Approx(1.5));
  }
  const json manifest = json::parse(read_text_file(dir + "network.json.manifest.json"));
  CHECK(manifest["summary"]["rides_read"] == 300);
  CHECK(manifest["seed"] == 11);

  auto bad = args;
  bad[4] = "30.69,30.65,104.03,104.08";
  CHECK(invoke(bad).code == 2);
  bad = args;
  bad[6] = "5";
  CHECK(invoke(bad).code == 2);
  bad = args;
  bad[2] = dir + "none.csv";
  CHECK(invoke(bad).code == 2);
}

TEST_CASE("exit codes") {
  CHECK(invoke({"--version"}).code == 0);
  CHECK(invoke({"price", "--help"}).code == 0);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"price"}).code == 2);
  CHECK(invoke({"synth", "--out", "x.json"}).code == 2);  // seed is mandatory

  // A cold-started active-set loop capped at one iteration cannot finish on
  // an instance that needs several pins.
  const std::string dir = scratch("exit");
  std::mt19937_64 rng(4);
  bool found = false;
  for (int trial = 0; trial < 500 && !found; ++trial) {
    const auto inst = oracle::random_instance(rng, {.min_nodes = 4, .max_nodes = 6, .max_arcs = 12});
    try {
      solve_general(inst.net, inst.ads, {.max_iterations = 1, .interior_warm_start = false});
    } catch (const Error& e) {
      if (e.code() != Errc::kNoConvergence) throw;
      write_text_file(dir + "hard.json", network_to_json(inst.net, &inst.ads));
      found = true;
    }
  }
  REQUIRE(found);
  const Outcome r =
      invoke({"price", "--network", dir + "hard.json", "--cold-start", "--max-iterations", "1", "--out", dir + "p.csv"});
  CHECK(r.code == 3);
  CHECK(r.err.find("NoConvergence") != std::string::npos);
  CHECK(invoke({"price", "--network", dir + "hard.json", "--out", dir + "p.csv"}).code == 0);
  CHECK(invoke({"price", "--network", dir + "hard.json", "--max-iterations", "-1"}).code == 2);
}

TEST_CASE("identical manifests reproduce identical bytes") {
  const std::string dir = scratch("determinism");
  const std::string net = synth(dir, 12, 17);
  const std::string ads = dir + "net.advertisers.json";
  const std::vector<std::vector<std::string>> commands{
      {"sweep-psi", "--network", net, "--advertisers", ads, "--seed", "5", "--out", dir + "a.csv"},
      {"select", "--network", net, "--advertisers", ads, "--mode", "arc", "--strategy", "random", "--seed", "5",
       "--out", dir + "a.csv"},
      {"price-extended", "--network", net, "--demand", "exp:2", "--psi", "60", "--seed", "5", "--out", dir + "a.csv"},
  };
  for (const auto& command : commands) {
    std::string first;
    {
      ThreadEnv env("1");
      REQUIRE(invoke(command).code == 0);
      first = read_text_file(dir + "a.csv");
    }
    {
      ThreadEnv env("4");
      std::ostringstream out, err;
      REQUIRE(cli::replay(dir + "a.csv.manifest.json", out, err) == 0);
      CHECK(read_text_file(dir + "a.csv") == first);
    }
  }
  // The random strategy depends on the seed.
  auto reseeded = commands[1];
  reseeded[10] = "6";
  REQUIRE(invoke(commands[1]).code == 0);
  const std::string five = read_text_file(dir + "a.csv");
  REQUIRE(invoke(reseeded).code == 0);
  CHECK(read_text_file(dir + "a.csv") != five);

  // Replay refuses changed inputs.
  REQUIRE(invoke(commands[0]).code == 0);
  write_text_file(ads, read_text_file(ads) + " ");
  std::ostringstream out, err;
  CHECK_THROWS_AS(cli::replay(dir + "a.csv.manifest.json", out, err), Error);
}
