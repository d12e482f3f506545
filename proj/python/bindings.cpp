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


#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "rp/electrical.hpp"
#include "rp/error.hpp"
#include "rp/extended.hpp"
#include "rp/ingest.hpp"
#include "rp/io.hpp"
#include "rp/pricing.hpp"
#include "rp/selection.hpp"

namespace py = pybind11;
using namespace rp;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ride-hailing origin-destination pricing via effective resistances";
  m.attr("__version__") = std::string(cli::version());

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::handle(error.ptr())(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error.ptr(), instance.ptr());
    }
  });

  py::class_<Arc>(m, "Arc")
      .def_readonly("from_", &Arc::from)
      .def_readonly("to", &Arc::to)
      .def("__repr__", [](const Arc& a) { return "Arc(" + std::to_string(a.from) + ", " + std::to_string(a.to) + ")"; });

  py::class_<EmptyRoute>(m, "EmptyRoute")
      .def(py::init([](int from, int to, double travel_time) { return EmptyRoute{from, to, travel_time}; }),
           py::arg("from_"), py::arg("to"), py::arg("travel_time"))
      .def_readonly("from_", &EmptyRoute::from)
      .def_readonly("to", &EmptyRoute::to)
      .def_readonly("travel_time", &EmptyRoute::travel_time);

  py::class_<TrafficNetwork>(m, "TrafficNetwork")
      .def(py::init([](const Eigen::MatrixXd& demand, const Eigen::MatrixXd& travel_time, double unit_cost,
                       std::vector<EmptyRoute> extra) {
             return TrafficNetwork::validate(demand, travel_time, unit_cost, std::move(extra));
           }),
           py::arg("demand"), py::arg("travel_time"), py::arg("unit_cost"),
           py::arg("extra_empty_routes") = std::vector<EmptyRoute>{})
      .def_property_readonly("size", &TrafficNetwork::size)
      .def_property_readonly("unit_cost", &TrafficNetwork::unit_cost)
      .def_property_readonly("demand", &TrafficNetwork::demand)
      .def_property_readonly("travel_time", &TrafficNetwork::travel_time)
      .def_property_readonly("arcs", [](const TrafficNetwork& n) { return std::vector<Arc>(n.arcs().begin(), n.arcs().end()); })
      .def("arc_index", &TrafficNetwork::arc_index)
      .def("has_symmetric_demand", &TrafficNetwork::has_symmetric_demand, py::arg("tol") = 0.0);

  py::class_<AdRevenueVector>(m, "AdRevenueVector")
      .def_static("zeros", &AdRevenueVector::zeros)
      .def_static("from_values", &AdRevenueVector::from_values)
      .def_property_readonly("values", &AdRevenueVector::values)
      .def("__len__", &AdRevenueVector::size)
      .def("__getitem__", [](const AdRevenueVector& a, std::size_t k) {
        if (k >= a.size()) throw py::index_error();
        return a[k];
      });

  m.def("resistance_matrix", [](const TrafficNetwork& net) { return build_electrical(net).resistance_matrix(); },
        "Effective resistances between all locations (inf across components)");
  m.def("value_vector", [](const TrafficNetwork& net, const AdRevenueVector& ads) { return value_vector(net, ads); });

  py::class_<PricingSolution>(m, "PricingSolution")
      .def_readonly("prices", &PricingSolution::prices)
      .def_readonly("flows", &PricingSolution::flows)
      .def_readonly("lambda_", &PricingSolution::lambda)
      .def_readonly("mu", &PricingSolution::mu)
      .def_readonly("active_set", &PricingSolution::active_set)
      .def_readonly("payoff", &PricingSolution::payoff)
      .def_readonly("consumer_surplus", &PricingSolution::consumer_surplus)
      .def_readonly("kkt_residual", &PricingSolution::kkt_residual)
      .def_readonly("iterations", &PricingSolution::iterations);

  m.def("solve_closed_form", &solve_closed_form, py::arg("network"), py::arg("ads"));
  m.def(
      "solve_general",
      [](const TrafficNetwork& net, const AdRevenueVector& ads, bool warm_start, int max_iterations) {
        GeneralSolverOptions options;
        options.interior_warm_start = warm_start;
        options.max_iterations = max_iterations;
        return solve_general(net, ads, options);
      },
      py::arg("network"), py::arg("ads"), py::arg("warm_start") = true, py::arg("max_iterations") = 0);
  m.def("price_sensitivity",
        [](const TrafficNetwork& net, const AdRevenueVector& ads, std::size_t arc) {
          return price_sensitivity(net, ads, arc);
        },
        py::arg("network"), py::arg("ads"), py::arg("arc"));
  m.def(
      "payoff_and_surplus",
      [](const TrafficNetwork& net, const AdRevenueVector& ads, const Eigen::VectorXd& prices) {
        const PayoffBreakdown b = payoff_and_surplus(net, ads, prices);
        return py::make_tuple(b.payoff, b.consumer_surplus);
      },
      py::arg("network"), py::arg("ads"), py::arg("prices"));

  py::class_<ExtendedSolution>(m, "ExtendedSolution")
      .def_readonly("prices", &ExtendedSolution::prices)
      .def_readonly("served_flows", &ExtendedSolution::served_flows)
      .def_readonly("empty_routes", &ExtendedSolution::empty_routes)
      .def_readonly("empty_flows", &ExtendedSolution::empty_flows)
      .def_readonly("capacity_dual", &ExtendedSolution::capacity_dual)
      .def_readonly("payoff", &ExtendedSolution::payoff)
      .def_readonly("capacity_used", &ExtendedSolution::capacity_used)
      .def_readonly("kkt_residual", &ExtendedSolution::kkt_residual)
      .def_readonly("local_only", &ExtendedSolution::local_only);
  m.def(
      "solve_extended",
      [](const TrafficNetwork& net, const AdRevenueVector& ads, double psi, double eta, const std::string& demand) {
        ExtendedParams params;
        params.psi = psi;
        params.eta = eta;
        params.demand = DemandModel::parse(demand);
        return solve_extended(net, ads, params);
      },
      py::arg("network"), py::arg("ads"), py::arg("psi"), py::arg("eta"), py::arg("demand") = "uniform");

  py::class_<AdvertiserCatalog>(m, "AdvertiserCatalog");
  m.def("parse_network_json", [](const std::string& text) {
    NetworkFile f = parse_network_json(text);
    return py::make_tuple(std::move(f.network), std::move(f.ads));
  });
  m.def("network_to_json", [](const TrafficNetwork& net) { return network_to_json(net); });
  m.def("parse_catalog_json", &parse_catalog_json);
  m.def("catalog_to_json", &catalog_to_json);
  m.def(
      "synth_instance",
      [](int n, double density, std::uint64_t seed, const std::string& profile) {
        SynthInstance s = synth_instance(n, density, seed, parse_synth_profile(profile));
        return py::make_tuple(std::move(s.network), std::move(s.catalog));
      },
      py::arg("n"), py::arg("density"), py::arg("seed"), py::arg("profile") = "commuter");

  m.def("delta", &delta, py::arg("network"), py::arg("ads"));
  m.def(
      "select",
      [](const TrafficNetwork& net, const AdvertiserCatalog& catalog, const std::string& mode) {
        if (mode != "arc" && mode != "location") throw Error(Errc::kUsage, "mode must be arc or location");
        const SelectionResult r =
            mode == "arc" ? select_arc_advertiser(net, catalog) : select_location_advertiser(net, catalog);
        return py::make_tuple(r.choice().label, r.payoff);
      },
      py::arg("network"), py::arg("catalog"), py::arg("mode"),
      "Returns (label, payoff) of the chosen advertiser");
  m.def(
      "strategy_compare",
      [](const TrafficNetwork& net, const AdvertiserCatalog& catalog, const std::string& mode, std::uint64_t seed,
         const std::string& model, double psi, double eta, const std::string& demand) {
        CompareOptions options;
        options.mode = mode == "arc" ? AdvertiserMode::kArc : AdvertiserMode::kLocation;
        options.model = model == "extended" ? PricingModel::kExtended : PricingModel::kBasic;
        options.extended.psi = psi;
        options.extended.eta = eta;
        options.extended.demand = DemandModel::parse(demand);
        options.seed = seed;
        const StrategyComparison cmp = strategy_compare(net, catalog, options);
        py::dict out;
        for (const StrategyRow& row : cmp.rows) {
          out[py::str(std::string(to_string(row.strategy)))] = py::make_tuple(row.payoff, row.gap_to_optimal);
        }
        return out;
      },
      py::arg("network"), py::arg("catalog"), py::arg("mode") = "location", py::arg("seed") = 0,
      py::arg("model") = "basic", py::arg("psi") = 300.0, py::arg("eta") = 0.8, py::arg("demand") = "uniform",
      "Maps strategy name to (payoff, gap_to_optimal)");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"resistive-pricing"};
        full.insert(full.end(), args.begin(), args.end());
        std::ostringstream out, err;
        const int code = cli::run(full, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI command; returns (exit_code, stdout, stderr)");
}
