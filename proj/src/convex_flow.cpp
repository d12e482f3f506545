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

#include "rp/convex_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/core.h>

#include "rp/error.hpp"

namespace rp {

double FlowVariable::value(double x) const {
  double f = linear * x - quadratic * x * x;
  if (entropy > 0.0 && x > 0.0) f -= entropy * x * std::log(x / scale);
  return f;
}

double FlowVariable::derivative(double x) const {
  double d = linear - 2.0 * quadratic * x;
  if (entropy > 0.0) d -= entropy * (std::log(x / scale) + 1.0);
  return d;
}

double FlowVariable::curvature(double x) const {
  double h = 2.0 * quadratic;
  if (entropy > 0.0) h += entropy / x;
  return h;
}

namespace {

using Eigen::VectorXd;

constexpr int kRefinementPasses = 3;
constexpr int kStallIterations = 10;
// The barrier target never drops below kMuFloor * tolerance.
constexpr double kMuFloor = 0.1;

// Iterate of the primal-dual method. Slacks are derived from x.
struct Iterate {
  VectorXd x, lambda, z_lower, z_upper;
  double z_cap = 0.0;
};

struct Direction {
  VectorXd dx, dlambda, dz_lower, dz_upper;
  double dz_cap = 0.0;
};

class InteriorPoint {
 public:
  // `row[i]` is node i's row in the balance system, or -1 for the grounded
  // node of its component.
  InteriorPoint(const ConvexFlowProgram& p, std::vector<int> row, int rows)
      : prog_(p), n_(static_cast<Eigen::Index>(p.variables.size())), row_(std::move(row)), rows_(rows) {
    lower_.resize(n_);
    upper_.resize(n_);
    weight_.resize(n_);
    has_upper_.resize(static_cast<std::size_t>(n_));
    for (Eigen::Index k = 0; k < n_; ++k) {
      const auto& v = var(k);
      lower_[k] = v.lower;
      upper_[k] = v.upper;
      weight_[k] = v.weight;
      has_upper_[static_cast<std::size_t>(k)] = std::isfinite(v.upper);
      if (v.entropy > 0.0 && v.lower < 0.0) {
        throw Error(Errc::kDimensionMismatch, "entropy terms need a nonnegative lower bound");
      }
    }
    has_cap_ = std::isfinite(p.capacity);
    pairs_ = static_cast<double>(n_ + std::count(has_upper_.begin(), has_upper_.end(), true) + (has_cap_ ? 1 : 0));
  }

  ConvexFlowResult run(const ConvexFlowOptions& options) {
    Iterate it = initial_point();
    // Best iterate so far, returned when progress stalls at an acceptable
    // level; rounding in the Newton systems bounds the reachable accuracy.
    Iterate best = it;
    Residuals best_r = residuals(it);
    int best_iter = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
      const Residuals r = residuals(it);
      if (!(r.error < std::numeric_limits<double>::infinity())) break;
      if (r.error <= options.tolerance) return finish(it, r, iter);
      if (r.error < best_r.error) {
        best = it;
        best_r = r;
        best_iter = iter;
      } else if (iter - best_iter >= kStallIterations && best_r.error <= options.acceptable_tolerance) {
        break;
      }
      factor(it);

      // Predictor.
      const Slacks s = slacks(it.x);
      VectorXd t_lower = -s.lower.cwiseProduct(it.z_lower);
      VectorXd t_upper = -s.upper.cwiseProduct(it.z_upper);
      double t_cap = -s.cap * it.z_cap;
      const Direction aff = solve(it, r, s, t_lower, t_upper, t_cap);
      const double alpha_aff = max_step(it, s, aff);
      const double mu_aff = complementarity(s, it, aff, alpha_aff);
      const double sigma = std::pow(mu_aff / r.mu, 3.0);
      const double target = std::max(sigma * r.mu, kMuFloor * options.tolerance);

      // Corrector with the second-order term.
      const VectorXd ds_upper = -aff.dx;
      const double ds_cap = -weight_.dot(aff.dx);
      t_lower = (target - (s.lower.cwiseProduct(it.z_lower) + aff.dx.cwiseProduct(aff.dz_lower)).array()).matrix();
      t_upper = (target - (s.upper.cwiseProduct(it.z_upper) + ds_upper.cwiseProduct(aff.dz_upper)).array()).matrix();
      for (Eigen::Index k = 0; k < n_; ++k) {
        if (!has_upper_[static_cast<std::size_t>(k)]) t_upper[k] = 0.0;
      }
      t_cap = has_cap_ ? target - s.cap * it.z_cap - ds_cap * aff.dz_cap : 0.0;
      const Direction d = solve(it, r, s, t_lower, t_upper, t_cap);
      const double alpha = std::min(1.0, 0.995 * max_step(it, s, d, /*unit_cap=*/false));

      it.x += alpha * d.dx;
      it.lambda += alpha * d.dlambda;
      it.z_lower += alpha * d.dz_lower;
      it.z_upper += alpha * d.dz_upper;
      it.z_cap += alpha * d.dz_cap;
    }
    if (best_r.error <= options.acceptable_tolerance) return finish(best, best_r, best_iter);
    throw Error(Errc::kNoConvergence,
                fmt::format("interior-point flow solver did not converge in {} iterations (residual {:.3g})",
                            options.max_iterations, best_r.error));
  }

 private:
  struct Slacks {
    VectorXd lower, upper;  // upper is 1 where unbounded (paired with z = 0)
    double cap = 1.0;
  };

  struct Residuals {
    VectorXd dual;     // per variable
    VectorXd primal;   // per node except the last
    double dual_inf = 0.0, primal_inf = 0.0, mu = 0.0;
    // max(dual_inf, primal_inf) relative to the terms they balance, and mu.
    double error = 0.0;
  };

  const FlowVariable& var(Eigen::Index k) const { return prog_.variables[static_cast<std::size_t>(k)]; }
  int from(Eigen::Index k) const { return var(k).from; }
  int to(Eigen::Index k) const { return var(k).to; }

  Iterate initial_point() const {
    double delta = 1.0;
    if (has_cap_) {
      const double headroom = prog_.capacity - weight_.dot(lower_);
      if (!(headroom > 0.0)) {
        throw Error(Errc::kInfeasible, "capacity is exhausted by the lower bounds");
      }
      delta = std::min(delta, 0.5 * headroom / std::max(weight_.sum(), 1e-300));
    }
    Iterate it;
    it.x.resize(n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      it.x[k] = lower_[k] + (has_upper_[static_cast<std::size_t>(k)] ? std::min(delta, 0.5 * (upper_[k] - lower_[k])) : delta);
    }
    it.lambda = VectorXd::Zero(rows_);
    it.z_lower = VectorXd::Ones(n_);
    it.z_upper = VectorXd::Zero(n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      if (has_upper_[static_cast<std::size_t>(k)]) it.z_upper[k] = 1.0;
    }
    it.z_cap = has_cap_ ? 1.0 : 0.0;
    return it;
  }

  Slacks slacks(const VectorXd& x) const {
    Slacks s;
    s.lower = x - lower_;
    s.upper = VectorXd::Ones(n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      if (has_upper_[static_cast<std::size_t>(k)]) s.upper[k] = upper_[k] - x[k];
    }
    s.cap = has_cap_ ? prog_.capacity - weight_.dot(x) : 1.0;
    return s;
  }

  double potential(const VectorXd& lambda, int node) const {
    const int r = row_[static_cast<std::size_t>(node)];
    return r < 0 ? 0.0 : lambda[r];
  }

  Residuals residuals(const Iterate& it) const {
    Residuals r;
    r.dual.resize(n_);
    VectorXd balance = VectorXd::Zero(prog_.nodes);
    double dual_scale = 0.0;
    for (Eigen::Index k = 0; k < n_; ++k) {
      const double grad = -var(k).derivative(it.x[k]);
      const double drop = potential(it.lambda, from(k)) - potential(it.lambda, to(k));
      r.dual[k] = grad + drop - it.z_lower[k] + it.z_upper[k] + weight_[k] * it.z_cap;
      dual_scale = std::max({dual_scale, std::abs(grad), std::abs(drop), it.z_lower[k], it.z_upper[k],
                             weight_[k] * it.z_cap});
      balance[from(k)] += it.x[k];
      balance[to(k)] -= it.x[k];
    }
    r.primal = VectorXd::Zero(rows_);
    for (int i = 0; i < prog_.nodes; ++i) {
      if (row_[static_cast<std::size_t>(i)] >= 0) r.primal[row_[static_cast<std::size_t>(i)]] = balance[i];
    }
    r.dual_inf = r.dual.cwiseAbs().maxCoeff();
    r.primal_inf = balance.cwiseAbs().maxCoeff();
    const Slacks s = slacks(it.x);
    double gap = s.lower.dot(it.z_lower) + s.upper.dot(it.z_upper);
    if (has_cap_) gap += s.cap * it.z_cap;
    r.mu = gap / pairs_;
    r.error = std::max({r.dual_inf / (1.0 + dual_scale), r.primal_inf / (1.0 + it.x.cwiseAbs().maxCoeff()), r.mu});
    if (std::isnan(r.error)) r.error = std::numeric_limits<double>::infinity();
    return r;
  }

  // Builds D and the bordered Schur complement K = B^T D^-1 B + E for the
  // current iterate, where B = [A^T w] and E = diag(0, s_cap / z_cap). The
  // capacity dual stays an unknown so K remains well conditioned as s_cap
  // tends to 0.
  void factor(const Iterate& it) {
    const Slacks s = slacks(it.x);
    d_inv_.resize(n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      double d = var(k).curvature(it.x[k]) + it.z_lower[k] / s.lower[k];
      if (has_upper_[static_cast<std::size_t>(k)]) d += it.z_upper[k] / s.upper[k];
      d_inv_[k] = 1.0 / d;
    }

    const int m = rows_;
    const int size = m + (has_cap_ ? 1 : 0);
    Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index k = 0; k < n_; ++k) {
      const int i = row_[static_cast<std::size_t>(from(k))], j = row_[static_cast<std::size_t>(to(k))];
      const double g = d_inv_[k];
      if (i >= 0) schur(i, i) += g;
      if (j >= 0) schur(j, j) += g;
      if (i >= 0 && j >= 0) {
        schur(i, j) -= g;
        schur(j, i) -= g;
      }
    }
    if (has_cap_) {
      const VectorXd adw = apply_incidence(d_inv_.cwiseProduct(weight_));
      schur.block(0, m, m, 1) = adw;
      schur.block(m, 0, 1, m) = adw.transpose();
      cap_ratio_ = s.cap / it.z_cap;
      schur(m, m) = weight_.dot(d_inv_.cwiseProduct(weight_)) + cap_ratio_;
    }
    schur_.compute(schur);
  }

  // A y without the grounded rows; A has +1 at `from`, -1 at `to`.
  VectorXd apply_incidence(const VectorXd& y) const {
    VectorXd out = VectorXd::Zero(rows_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      const int i = row_[static_cast<std::size_t>(from(k))], j = row_[static_cast<std::size_t>(to(k))];
      if (i >= 0) out[i] += y[k];
      if (j >= 0) out[j] -= y[k];
    }
    return out;
  }

  VectorXd apply_incidence_transpose(const VectorXd& lambda) const {
    VectorXd out(n_);
    for (Eigen::Index k = 0; k < n_; ++k) out[k] = potential(lambda, from(k)) - potential(lambda, to(k));
    return out;
  }

  Direction solve(const Iterate& it, const Residuals& r, const Slacks& s, const VectorXd& t_lower,
                  const VectorXd& t_upper, double t_cap) const {
    VectorXd rhs = -r.dual + t_lower.cwiseQuotient(s.lower);
    for (Eigen::Index k = 0; k < n_; ++k) {
      if (has_upper_[static_cast<std::size_t>(k)]) rhs[k] -= t_upper[k] / s.upper[k];
    }

    const int m = rows_;
    const VectorXd d_rhs = d_inv_.cwiseProduct(rhs);
    VectorXd b(m + (has_cap_ ? 1 : 0));
    b.head(m) = apply_incidence(d_rhs) + r.primal;
    if (has_cap_) b[m] = weight_.dot(d_rhs) + t_cap / it.z_cap;
    VectorXd y = schur_.solve(b);

    // dx = D^-1 (rhs - B y) solves the first block row exactly; refine y
    // against B^T dx - E y = (-r_primal, -t_cap / z_cap), which the Schur
    // solve only meets up to the conditioning of K.
    VectorXd target(b.size());
    target.head(m) = -r.primal;
    if (has_cap_) target[m] = -t_cap / it.z_cap;
    Direction d;
    for (int pass = 0;; ++pass) {
      d.dlambda = y.head(m);
      d.dz_cap = has_cap_ ? y[m] : 0.0;
      VectorXd by = apply_incidence_transpose(d.dlambda);
      if (has_cap_) by += weight_ * d.dz_cap;
      d.dx = d_inv_.cwiseProduct(rhs - by);
      if (pass == kRefinementPasses) break;
      VectorXd residual = target;
      residual.head(m) -= apply_incidence(d.dx);
      if (has_cap_) residual[m] -= weight_.dot(d.dx) - cap_ratio_ * y[m];
      if (residual.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + target.cwiseAbs().maxCoeff())) break;
      y -= schur_.solve(residual);
    }
    d.dz_lower = (t_lower - it.z_lower.cwiseProduct(d.dx)).cwiseQuotient(s.lower);
    d.dz_upper = VectorXd::Zero(n_);
    for (Eigen::Index k = 0; k < n_; ++k) {
      if (has_upper_[static_cast<std::size_t>(k)]) d.dz_upper[k] = (t_upper[k] + it.z_upper[k] * d.dx[k]) / s.upper[k];
    }
    return d;
  }

  double max_step(const Iterate& it, const Slacks& s, const Direction& d, bool unit_cap = true) const {
    double alpha = unit_cap ? 1.0 : std::numeric_limits<double>::infinity();
    const auto limit = [&](double value, double change) {
      if (change < 0.0) alpha = std::min(alpha, -value / change);
    };
    for (Eigen::Index k = 0; k < n_; ++k) {
      limit(s.lower[k], d.dx[k]);
      limit(it.z_lower[k], d.dz_lower[k]);
      if (has_upper_[static_cast<std::size_t>(k)]) {
        limit(s.upper[k], -d.dx[k]);
        limit(it.z_upper[k], d.dz_upper[k]);
      }
    }
    if (has_cap_) {
      limit(s.cap, -weight_.dot(d.dx));
      limit(it.z_cap, d.dz_cap);
    }
    return alpha;
  }

  double complementarity(const Slacks& s, const Iterate& it, const Direction& d, double alpha) const {
    double gap = (s.lower + alpha * d.dx).dot(it.z_lower + alpha * d.dz_lower);
    for (Eigen::Index k = 0; k < n_; ++k) {
      if (has_upper_[static_cast<std::size_t>(k)]) {
        gap += (s.upper[k] - alpha * d.dx[k]) * (it.z_upper[k] + alpha * d.dz_upper[k]);
      }
    }
    if (has_cap_) gap += (s.cap - alpha * weight_.dot(d.dx)) * (it.z_cap + alpha * d.dz_cap);
    return gap / pairs_;
  }

  ConvexFlowResult finish(const Iterate& it, const Residuals& r, int iterations) const {
    ConvexFlowResult out;
    out.x = it.x;
    out.potentials.resize(prog_.nodes);
    for (int i = 0; i < prog_.nodes; ++i) out.potentials[i] = potential(it.lambda, i);
    out.lower_duals = it.z_lower;
    out.capacity_dual = it.z_cap;
    out.objective = 0.0;
    for (Eigen::Index k = 0; k < n_; ++k) out.objective += var(k).value(it.x[k]);
    out.stationarity = r.dual_inf;
    out.balance = r.primal_inf;
    out.complementarity = r.mu;
    out.iterations = iterations;
    return out;
  }

  const ConvexFlowProgram& prog_;
  Eigen::Index n_;
  VectorXd lower_, upper_, weight_;
  std::vector<bool> has_upper_;
  std::vector<int> row_;
  int rows_ = 0;
  bool has_cap_ = false;
  double pairs_ = 1.0;

  VectorXd d_inv_;
  double cap_ratio_ = 0.0;  // s_cap / z_cap
  Eigen::LDLT<Eigen::MatrixXd> schur_;
};

// Strongly connected component of every node in the variable graph.
std::vector<int> strong_components(const ConvexFlowProgram& program) {
  const auto n = static_cast<std::size_t>(program.nodes);
  std::vector<std::vector<int>> out(n), in(n);
  for (const auto& v : program.variables) {
    out[static_cast<std::size_t>(v.from)].push_back(v.to);
    in[static_cast<std::size_t>(v.to)].push_back(v.from);
  }
  // Kosaraju: finishing order on the graph, then sweeps on the reverse.
  std::vector<int> order;
  std::vector<bool> seen(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(root), 0}};
    seen[root] = true;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& succ = out[static_cast<std::size_t>(node)];
      if (next < succ.size()) {
        const int m = succ[next++];
        if (!seen[static_cast<std::size_t>(m)]) {
          seen[static_cast<std::size_t>(m)] = true;
          stack.emplace_back(m, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  std::vector<int> comp(n, -1);
  int count = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[static_cast<std::size_t>(*it)] >= 0) continue;
    std::vector<int> stack{*it};
    comp[static_cast<std::size_t>(*it)] = count;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      for (int m : in[static_cast<std::size_t>(node)]) {
        if (comp[static_cast<std::size_t>(m)] < 0) {
          comp[static_cast<std::size_t>(m)] = count;
          stack.push_back(m);
        }
      }
    }
    ++count;
  }
  return comp;
}

}  // namespace

ConvexFlowResult solve_convex_flow(const ConvexFlowProgram& program, const ConvexFlowOptions& options) {
  if (program.nodes < 2) throw Error(Errc::kDimensionMismatch, "flow program needs at least two nodes");
  for (const auto& v : program.variables) {
    if (v.from < 0 || v.to < 0 || v.from >= program.nodes || v.to >= program.nodes || v.from == v.to) {
      throw Error(Errc::kDimensionMismatch, fmt::format("flow variable ({},{}) is out of range", v.from, v.to));
    }
    if (!(v.lower < v.upper) || v.quadratic < 0.0 || v.entropy < 0.0) {
      throw Error(Errc::kDimensionMismatch, fmt::format("flow variable ({},{}) has invalid bounds or curvature", v.from, v.to));
    }
  }

  // A balanced flow vanishes on every variable that lies on no directed
  // cycle; those are fixed at 0 and the rest is solved per component.
  const std::vector<int> comp = strong_components(program);
  ConvexFlowProgram reduced;
  reduced.nodes = program.nodes;
  reduced.capacity = program.capacity;
  std::vector<Eigen::Index> kept;
  for (std::size_t k = 0; k < program.variables.size(); ++k) {
    const auto& v = program.variables[k];
    if (comp[static_cast<std::size_t>(v.from)] == comp[static_cast<std::size_t>(v.to)]) {
      kept.push_back(static_cast<Eigen::Index>(k));
      reduced.variables.push_back(v);
    } else if (v.lower > 0.0) {
      throw Error(Errc::kInfeasible,
                  fmt::format("flow variable ({},{}) lies on no cycle but has a positive lower bound", v.from, v.to));
    }
  }
  // Ground the highest-indexed node of each component.
  std::vector<int> row(static_cast<std::size_t>(program.nodes), -1);
  std::vector<bool> grounded(static_cast<std::size_t>(program.nodes), false);
  int rows = 0;
  for (int i = program.nodes - 1; i >= 0; --i) {
    const auto c = static_cast<std::size_t>(comp[static_cast<std::size_t>(i)]);
    if (!grounded[c]) {
      grounded[c] = true;
    } else {
      row[static_cast<std::size_t>(i)] = 0;
    }
  }
  for (int i = 0; i < program.nodes; ++i) {
    if (row[static_cast<std::size_t>(i)] == 0) row[static_cast<std::size_t>(i)] = rows++;
  }

  const auto total = static_cast<Eigen::Index>(program.variables.size());
  ConvexFlowResult out;
  if (reduced.variables.empty()) {
    if (std::isfinite(program.capacity) && !(program.capacity > 0.0)) {
      throw Error(Errc::kInfeasible, "capacity is exhausted by the lower bounds");
    }
    out.potentials = Eigen::VectorXd::Zero(program.nodes);
  } else {
    out = InteriorPoint(reduced, row, rows).run(options);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(total);
  Eigen::VectorXd z = Eigen::VectorXd::Constant(total, std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    x[kept[r]] = out.x[static_cast<Eigen::Index>(r)];
    z[kept[r]] = out.lower_duals[static_cast<Eigen::Index>(r)];
  }
  out.x = std::move(x);
  out.lower_duals = std::move(z);
  out.objective = 0.0;
  for (std::size_t k = 0; k < program.variables.size(); ++k) {
    out.objective += program.variables[k].value(out.x[static_cast<Eigen::Index>(k)]);
  }
  return out;
}

}  // namespace rp
