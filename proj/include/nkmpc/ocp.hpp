/*
 Copyright 2026 The nkmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

// Discretized minimum-time prediction problem on the scaled horizon [0, 1].
//
// The unknown vector U stacks, for every stage i = 0..N-1, the control u_i,
// the dummy (slack) variable u_{d,i} and the constraint multiplier mu_i,
// followed by the terminal multipliers nu and the horizon length p:
//
//   U = [u_0, ud_0, mu_0, ..., u_{N-1}, ud_{N-1}, mu_{N-1}, nu, p]
//
// States x_i and costates lambda_i are eliminated by a forward sweep of the
// Euler-discretized dynamics and a backward sweep of the costate equation,
// after which the residual F(U, x_t, t) is the gradient of the discrete
// Lagrangian with respect to U.

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "nkmpc/linalg.hpp"

namespace nkmpc {

struct ProblemDims {
  std::size_t n_x = 0;
  std::size_t n_u = 0;
  std::size_t n_d = 0;
  std::size_t n_c = 0;
  std::size_t n_psi = 0;

  std::size_t stage_width() const { return n_u + n_d + n_c; }
  /// Width of the dense border of the Jacobian: terminal constraints plus p.
  std::size_t border_width() const { return n_psi + 1; }
  std::size_t flat_size(std::size_t horizon) const { return horizon * stage_width() + border_width(); }
};

/// Arguments of the Hamiltonian H(tau, x, lambda, u, ud, mu, p) at one stage.
/// `lambda` is the costate of the *next* node, lambda_{i+1}.
struct StagePoint {
  double tau = 0.0;
  std::span<const double> x;
  std::span<const double> lambda;
  std::span<const double> u;
  std::span<const double> ud;
  std::span<const double> mu;
  double p = 0.0;
};

/// Callback bundle describing one prediction problem. Output sizes of every
/// callback must match `dims`; validate_model() probes them once.
struct ModelDefinition {
  using StateFn = std::function<Vector(double tau, std::span<const double> x, double p)>;
  using StageFn = std::function<Vector(const StagePoint&)>;

  std::string name;
  ProblemDims dims;

  std::function<Vector(double tau, std::span<const double> x, std::span<const double> u, double p)> dynamics;
  std::function<Vector(double tau, std::span<const double> x, std::span<const double> u,
                       std::span<const double> ud, double p)>
      constraint;

  StageFn dH_dx;
  StageFn dH_du;
  StageFn dH_dud;
  StageFn dH_dmu;
  std::function<double(const StagePoint&)> dH_dp;

  StateFn dphi_dx;
  StateFn psi;
  StateFn dpsi_dx;  // n_psi x n_x, row-major
  // d(phi + nu^T psi)/dp at the terminal node.
  std::function<double(double tau, std::span<const double> x, std::span<const double> nu, double p)> terminal_dp;

  // Optional: Hessian of H with respect to the stage triple (u, ud, mu),
  // row-major stage_width x stage_width. Needed by the sparse preconditioner.
  StageFn stage_hessian;

  // Optional: stage triple used to initialize a cold start for horizon p.
  std::function<Vector(double p)> initial_stage;
};

/// Probes every callback at a zero point and throws ConfigError on a missing
/// callback or a dimension mismatch.
void validate_model(const ModelDefinition& model);

class HorizonSolution {
 public:
  HorizonSolution() = default;
  HorizonSolution(const ProblemDims& dims, std::size_t horizon);
  HorizonSolution(const ProblemDims& dims, std::size_t horizon, Vector coeffs);

  std::size_t horizon() const { return horizon_; }
  const ProblemDims& dims() const { return dims_; }
  std::size_t size() const { return coeffs_.size(); }
  double step() const { return 1.0 / static_cast<double>(horizon_); }

  std::span<double> coeffs() { return coeffs_; }
  std::span<const double> coeffs() const { return coeffs_; }
  Vector& vector() { return coeffs_; }
  const Vector& vector() const { return coeffs_; }

  std::span<double> stage(std::size_t i) { return {coeffs_.data() + i * dims_.stage_width(), dims_.stage_width()}; }
  std::span<const double> stage(std::size_t i) const {
    return {coeffs_.data() + i * dims_.stage_width(), dims_.stage_width()};
  }
  std::span<const double> u(std::size_t i) const { return stage(i).subspan(0, dims_.n_u); }
  std::span<const double> ud(std::size_t i) const { return stage(i).subspan(dims_.n_u, dims_.n_d); }
  std::span<const double> mu(std::size_t i) const { return stage(i).subspan(dims_.n_u + dims_.n_d, dims_.n_c); }

  std::span<double> nu() { return {coeffs_.data() + horizon_ * dims_.stage_width(), dims_.n_psi}; }
  std::span<const double> nu() const { return {coeffs_.data() + horizon_ * dims_.stage_width(), dims_.n_psi}; }

  double& p() { return coeffs_.back(); }
  double p() const { return coeffs_.back(); }

 private:
  ProblemDims dims_;
  std::size_t horizon_ = 0;
  Vector coeffs_;
};

/// States x_0..x_N and costates lambda_0..lambda_N, each of length n_x.
class RecursionBuffers {
 public:
  RecursionBuffers(std::size_t horizon, std::size_t n_x)
      : horizon_(horizon), n_x_(n_x), states_((horizon + 1) * n_x, 0.0), costates_((horizon + 1) * n_x, 0.0) {}

  std::size_t horizon() const { return horizon_; }
  std::size_t n_x() const { return n_x_; }

  std::span<double> x(std::size_t i) { return {states_.data() + i * n_x_, n_x_}; }
  std::span<const double> x(std::size_t i) const { return {states_.data() + i * n_x_, n_x_}; }
  std::span<double> lambda(std::size_t i) { return {costates_.data() + i * n_x_, n_x_}; }
  std::span<const double> lambda(std::size_t i) const { return {costates_.data() + i * n_x_, n_x_}; }

 private:
  std::size_t horizon_;
  std::size_t n_x_;
  Vector states_;
  Vector costates_;
};

/// x_0 = x_t, x_{i+1} = x_i + f(tau_i, x_i, u_i, p) * dtau.
RecursionBuffers forward_recursion(const ModelDefinition& model, std::span<const double> x_t,
                                   const HorizonSolution& U);

/// lambda_N = dphi/dx^T + dpsi/dx^T nu, lambda_i = lambda_{i+1} + dH/dx^T * dtau.
/// Expects the states of `buffers` to be filled by forward_recursion.
RecursionBuffers backward_recursion(const ModelDefinition& model, RecursionBuffers buffers,
                                    const HorizonSolution& U);

/// Residual F(U, x_t, t) in the flat order of U. Throws DivergenceError when
/// any state, costate or residual row is non-finite.
Vector evaluate_F(const ModelDefinition& model, const HorizonSolution& U, std::span<const double> x_t,
                  double t);

}  // namespace nkmpc
