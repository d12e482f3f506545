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

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace rp {

/*
  Separable concave flow program

      maximize    sum_k f_k(x_k)
      subject to  inflow(i) == outflow(i)        for every node i
                  sum_k weight_k x_k <= capacity
                  lower_k <= x_k <= upper_k

  with f_k(x) = linear * x - quadratic * x^2 - entropy * x * log(x / scale).
  Solved by a primal-dual interior-point method (Mehrotra predictor-corrector)
  whose Newton systems reduce to a weighted Laplacian of size N-1, bordered
  by one row for the capacity constraint.
*/
struct FlowVariable {
  int from = 0;
  int to = 0;
  double weight = 0.0;  // coefficient in the capacity row
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double linear = 0.0;
  double quadratic = 0.0;  // >= 0
  double entropy = 0.0;    // >= 0, requires lower >= 0
  double scale = 1.0;

  double value(double x) const;
  double derivative(double x) const;
  double curvature(double x) const;  // -f''(x) >= 0
};

struct ConvexFlowProgram {
  int nodes = 0;
  std::vector<FlowVariable> variables;
  double capacity = std::numeric_limits<double>::infinity();
};

// Residuals are the dual and balance violations relative to the magnitude
// of the terms they balance, and the average complementarity.
struct ConvexFlowOptions {
  double tolerance = 1e-10;
  // Accepted when progress stalls or the iteration cap is reached.
  double acceptable_tolerance = 1e-8;
  int max_iterations = 200;
};

struct ConvexFlowResult {
  Eigen::VectorXd x;
  // Balance duals; the highest-indexed node of each strongly connected
  // component of the variable graph is pinned to 0.
  Eigen::VectorXd potentials;
  // Multipliers of x >= lower; +inf for variables on no directed cycle,
  // which every balanced flow leaves at 0.
  Eigen::VectorXd lower_duals;
  double capacity_dual = 0.0;
  double objective = 0.0;
  double stationarity = 0.0;  // inf-norm of the dual residual
  double balance = 0.0;       // inf-norm of the node imbalance
  double complementarity = 0.0;
  int iterations = 0;
};

// Throws Errc::kInfeasible when the bounds alone exceed the capacity or a
// variable on no directed cycle has a positive lower bound, and
// Errc::kNoConvergence at the iteration cap.
ConvexFlowResult solve_convex_flow(const ConvexFlowProgram& program, const ConvexFlowOptions& options = {});

}  // namespace rp
