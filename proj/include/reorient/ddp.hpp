// Copyright 2026 The Reorient Authors
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

// Gauss-Newton DDP (iLQR) over a fixed horizon of discrete steps
//   x_{k+1} = F(x_k, u_k, k),  k = 0 .. N-1,
// minimizing sum_k l(x_k, u_k, k) + l_f(x_N).

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace reorient {

struct DdpOptions {
  int max_iterations = 500;
  // Converged once the relative cost decrease stays below this for
  // `convergence_window` consecutive accepted iterations.
  double convergence_tolerance = 1e-6;
  int convergence_window = 2;
  double min_expected_improvement = 1e-8;
  // Levenberg-Marquardt term added to the value Hessian in the backward pass.
  double reg_initial = 0.0;
  double reg_min = 1e-6;
  double reg_increase = 10.0;
  double reg_decrease = 2.0;
  double reg_max = 1e10;
  int line_search_steps = 11;  // alpha = 1, 1/2, ..., 2^-10
  double armijo = 1e-4;
  double horizon = 0.5;
  double dt = 0.001;

  int knots() const { return static_cast<int>(std::lround(horizon / dt)); }
};

template <int Nx, int Nu>
struct StageDerivatives {
  Eigen::Matrix<double, Nx, Nx> A;
  Eigen::Matrix<double, Nx, Nu> B;
  Eigen::Matrix<double, Nx, 1> lx;
  Eigen::Matrix<double, Nu, 1> lu;
  Eigen::Matrix<double, Nx, Nx> lxx;
  Eigen::Matrix<double, Nu, Nu> luu;
  Eigen::Matrix<double, Nu, Nx> lux;
};

template <class P>
concept DdpProblem = requires(const P& p, const typename P::StateVec& x, const typename P::InputVec& u,
                              int k, StageDerivatives<P::kNx, P::kNu>& d,
                              typename P::StateVec& gx, typename P::StateMat& gxx) {
  { p.horizon() } -> std::convertible_to<int>;
  { p.step(x, u, k) } -> std::convertible_to<typename P::StateVec>;
  { p.running_cost(x, u, k) } -> std::convertible_to<double>;
  { p.terminal_cost(x) } -> std::convertible_to<double>;
  p.stage_derivatives(x, u, k, d);
  p.terminal_derivatives(x, gx, gxx);
};

template <int Nx, int Nu>
struct DdpResult {
  std::vector<Eigen::Matrix<double, Nx, 1>> xs;  // N + 1 states
  std::vector<Eigen::Matrix<double, Nu, 1>> us;  // N inputs
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_log;  // cost after each accepted iterate, starting with the initial guess
  std::string diagnostic;
};

namespace detail {

template <DdpProblem P>
bool simulate(const P& p, const typename P::StateVec& x0, const std::vector<typename P::InputVec>& us,
              std::vector<typename P::StateVec>& xs, double& cost) {
  const int n = p.horizon();
  xs.resize(n + 1);
  xs[0] = x0;
  cost = 0.0;
  for (int k = 0; k < n; ++k) {
    cost += p.running_cost(xs[k], us[k], k);
    xs[k + 1] = p.step(xs[k], us[k], k);
    if (!xs[k + 1].allFinite()) return false;
  }
  cost += p.terminal_cost(xs[n]);
  return std::isfinite(cost);
}

}  // namespace detail

template <DdpProblem P>
DdpResult<P::kNx, P::kNu> ddp_solve_problem(const P& p, const typename P::StateVec& x0,
                                             std::vector<typename P::InputVec> us, const DdpOptions& opt) {
  constexpr int Nx = P::kNx;
  constexpr int Nu = P::kNu;
  using XVec = Eigen::Matrix<double, Nx, 1>;
  using UVec = Eigen::Matrix<double, Nu, 1>;
  using XMat = Eigen::Matrix<double, Nx, Nx>;
  using UMat = Eigen::Matrix<double, Nu, Nu>;
  using UXMat = Eigen::Matrix<double, Nu, Nx>;

  const int n = p.horizon();
  if (opt.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(opt.convergence_tolerance > 0.0)) throw std::invalid_argument("convergence_tolerance must be > 0");
  if (static_cast<int>(us.size()) != n) throw std::invalid_argument("initial control sequence has wrong length");

  DdpResult<Nx, Nu> res;
  std::vector<XVec> xs;
  double cost = 0.0;
  if (!detail::simulate(p, x0, us, xs, cost)) {
    res.diagnostic = "initial guess produces a non-finite rollout";
    res.us = us;
    res.xs = xs;
    res.cost = std::numeric_limits<double>::infinity();
    return res;
  }
  res.cost_log.push_back(cost);

  std::vector<StageDerivatives<Nx, Nu>> der(n);
  std::vector<UVec> kff(n);
  std::vector<UXMat> K(n);
  std::vector<XVec> xs_new;
  std::vector<UVec> us_new(n);
  double mu = opt.reg_initial;
  int small_steps = 0;
  bool need_derivatives = true;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    if (need_derivatives) {
      for (int k = 0; k < n; ++k) p.stage_derivatives(xs[k], us[k], k, der[k]);
      need_derivatives = false;
    }

    // Backward pass; retried with more regularization if Quu is not PD.
    double dv1 = 0.0;
    double dv2 = 0.0;
    bool backward_ok = false;
    while (!backward_ok) {
      XVec vx;
      XMat vxx;
      p.terminal_derivatives(xs[n], vx, vxx);
      dv1 = dv2 = 0.0;
      backward_ok = true;
      for (int k = n - 1; k >= 0; --k) {
        const auto& d = der[k];
        const XMat vxx_reg = vxx + mu * XMat::Identity();
        const XVec qx = d.lx + d.A.transpose() * vx;
        const UVec qu = d.lu + d.B.transpose() * vx;
        const XMat qxx = d.lxx + d.A.transpose() * vxx * d.A;
        const Eigen::Matrix<double, Nx, Nu> vb = vxx_reg * d.B;
        const UMat quu = d.luu + d.B.transpose() * vb;
        const UXMat qux = d.lux + vb.transpose() * d.A;
        Eigen::LLT<UMat> llt(quu);
        if (llt.info() != Eigen::Success) {
          backward_ok = false;
          break;
        }
        kff[k] = -llt.solve(qu);
        K[k] = -llt.solve(qux);
        const UMat quu_plain = d.luu + d.B.transpose() * vxx * d.B;
        const UXMat qux_plain = d.lux + d.B.transpose() * vxx * d.A;
        vx = qx + K[k].transpose() * quu_plain * kff[k] + K[k].transpose() * qu + qux_plain.transpose() * kff[k];
        vxx = qxx + K[k].transpose() * quu_plain * K[k] + K[k].transpose() * qux_plain +
              qux_plain.transpose() * K[k];
        vxx = 0.5 * (vxx + vxx.transpose()).eval();
        dv1 += kff[k].dot(qu);
        dv2 += 0.5 * kff[k].dot(quu_plain * kff[k]);
      }
      if (!backward_ok) {
        mu = std::max(mu * opt.reg_increase, opt.reg_min);
        if (mu > opt.reg_max) {
          res.diagnostic = "regularization exceeded maximum in backward pass";
          res.xs = xs;
          res.us = us;
          res.cost = cost;
          return res;
        }
      }
    }

    if (-(dv1 + dv2) < opt.min_expected_improvement) {
      res.converged = true;
      res.diagnostic = "expected improvement below threshold";
      break;
    }

    // Line search.
    bool accepted = false;
    double alpha = 1.0;
    double new_cost = 0.0;
    for (int ls = 0; ls < opt.line_search_steps; ++ls, alpha *= 0.5) {
      xs_new.resize(n + 1);
      xs_new[0] = x0;
      new_cost = 0.0;
      bool finite = true;
      for (int k = 0; k < n; ++k) {
        us_new[k] = us[k] + alpha * kff[k] + K[k] * (xs_new[k] - xs[k]);
        new_cost += p.running_cost(xs_new[k], us_new[k], k);
        xs_new[k + 1] = p.step(xs_new[k], us_new[k], k);
        if (!xs_new[k + 1].allFinite()) {
          finite = false;
          break;
        }
      }
      if (!finite) continue;
      new_cost += p.terminal_cost(xs_new[n]);
      if (!std::isfinite(new_cost)) continue;
      const double expected = -(alpha * dv1 + alpha * alpha * dv2);
      const double actual = cost - new_cost;
      if (actual > 0.0 && actual >= opt.armijo * expected) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      mu = std::max(mu * opt.reg_increase, opt.reg_min);
      if (mu > opt.reg_max) {
        res.diagnostic = "regularization exceeded maximum in line search";
        break;
      }
      continue;
    }

    const double rel = (cost - new_cost) / std::max(std::abs(cost), 1e-12);
    xs.swap(xs_new);
    us.swap(us_new);
    cost = new_cost;
    res.cost_log.push_back(cost);
    need_derivatives = true;
    mu /= opt.reg_decrease;
    if (mu < opt.reg_min) mu = 0.0;

    small_steps = rel < opt.convergence_tolerance ? small_steps + 1 : 0;
    if (small_steps >= opt.convergence_window) {
      res.converged = true;
      res.diagnostic = "relative cost decrease below tolerance";
      break;
    }
  }
  if (!res.converged && res.diagnostic.empty()) {
    std::ostringstream os;
    os << "no convergence within " << opt.max_iterations << " iterations";
    res.diagnostic = os.str();
  }
  res.xs = std::move(xs);
  res.us = std::move(us);
  res.cost = cost;
  return res;
}

}  // namespace reorient
