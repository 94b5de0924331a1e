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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "nkmpc/linalg.hpp"
#include "nkmpc/ocp.hpp"

namespace nkmpc {

using LinearOperator = std::function<Vector(std::span<const double>)>;

class OperatorDivergenceError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultFdStep = 1e-8;

/// Forward-difference directional derivative of F around a frozen base point:
///   a(V) = (F(U0 + hV, x_t, t) - F(U0, x_t, t)) / h.
/// The base residual is evaluated once on construction.
class FdOperator {
 public:
  FdOperator(const ModelDefinition& model, HorizonSolution base, Vector x_t, double t, double h = kDefaultFdStep);

  Vector apply(std::span<const double> v) const;

  std::size_t dimension() const { return base_.size(); }
  const Vector& base_residual() const { return base_residual_; }
  const HorizonSolution& base_point() const { return base_; }
  std::span<const double> state() const { return x_t_; }
  double time() const { return t_; }
  double step() const { return h_; }
  const ModelDefinition& model() const { return *model_; }

  /// Residual evaluations made by apply() so far (the base evaluation excluded).
  std::size_t evaluations() const { return evaluations_; }

  LinearOperator as_operator() const {
    return [this](std::span<const double> v) { return apply(v); };
  }

 private:
  const ModelDefinition* model_;
  HorizonSolution base_;
  Vector x_t_;
  double t_;
  double h_;
  Vector base_residual_;
  mutable HorizonSolution probe_;
  mutable std::size_t evaluations_ = 0;
};

inline Vector apply_operator(const FdOperator& op, std::span<const double> v) { return op.apply(v); }

struct GmresReport {
  std::size_t iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::size_t basis_size = 0;
  /// Preconditioned residual norm after each iteration; entry 0 is the initial norm.
  std::vector<double> history;
};

struct GmresResult {
  Vector solution;
  GmresReport report;
};

/// Full-memory GMRES with optional left preconditioning, starting from zero.
/// Convergence is ||P(b - A x)||_2 <= tol where P is `precond` (identity if
/// empty). Stops after `max_iter` Arnoldi steps and returns the minimal
/// residual iterate with converged = false.
GmresResult gmres(const LinearOperator& op, std::span<const double> b, double tol, std::size_t max_iter,
                  const LinearOperator& precond = {});

inline constexpr std::size_t kDenseSolveLimit = 2000;

/// Builds the matrix column by column from op(e_k).
DenseMatrix materialize(const LinearOperator& op, std::size_t dim);

/// Materializes the operator and solves by Gaussian elimination with partial
/// pivoting. Throws SingularMatrixError carrying the pivot magnitude.
Vector dense_direct_solve(const LinearOperator& op, std::span<const double> b);

}  // namespace nkmpc
