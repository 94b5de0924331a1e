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

// Receding-horizon driver: cold start at t0, then at each system step a warm
// start from the previous horizon solution (optionally shifted along the
// horizon), k Newton-Krylov refinements, control extraction and explicit
// Euler propagation of the plant x' = y, y' = u.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nkmpc/krylov.hpp"
#include "nkmpc/models.hpp"
#include "nkmpc/ocp.hpp"

namespace nkmpc {

struct MpcConfig {
  ModelChoice model = Model1Params{};
  std::size_t horizon = 20;
  std::size_t steps = 1000;
  /// System time step; when unset, the cold-start horizon p0 divided by `steps`.
  std::optional<double> dt;
  std::size_t refinements = 1;
  bool shifting = false;
  bool preconditioning = true;
  double fd_step = kDefaultFdStep;
  double gmres_tol = 1e-6;
  /// 0 selects the flat dimension of U.
  std::size_t gmres_max_iter = 0;
  double p0 = 2.5;
  std::size_t cold_start_max_iter = 200;
  double divergence_threshold = 1e6;
  std::array<double, 2> x0{-1.0, 0.0};
  double terminal_radius = 5e-2;
  /// Diagnostic: also count unpreconditioned GMRES iterations on every linear
  /// system solved with the preconditioner (the solution is not used).
  bool compare_unpreconditioned = false;

  void validate() const;
};

struct StepStats {
  std::size_t step = 0;
  double t = 0.0;
  double residual_before = 0.0;  // ||F(U_{j-1}, x_j, t_j)||_2, after shifting if enabled
  double residual_after = 0.0;   // ||F(U_j, x_j, t_j)||_2 after all refinements
  std::size_t gmres_iterations = 0;
  std::vector<std::size_t> refinement_iterations;
  std::vector<std::size_t> unpreconditioned_iterations;
  bool gmres_converged = true;
  double p = 0.0;
  double wall_seconds = 0.0;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  /// Applied (clamped) control; NaN on the final row where none is applied.
  double u = 0.0;
  double u_raw = 0.0;
  double ud = 0.0;
  /// Present on rows where a horizon problem was solved.
  std::optional<StepStats> stats;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  double dt = 0.0;
  double p0 = 0.0;
  std::size_t cold_start_iterations = 0;
  double cold_start_residual = 0.0;
  /// Set when the run stopped because the horizon length fell to 2*dt.
  bool horizon_exhausted = false;
};

enum class FailureKind { cold_start, step_divergence, horizon_exhausted };

std::string to_string(FailureKind kind);

class SimulationFailure : public Error {
 public:
  SimulationFailure(FailureKind kind, const std::string& what, Trajectory partial,
                    std::optional<StepStats> stats = std::nullopt)
      : Error(what), kind_(kind), partial_(std::move(partial)), stats_(std::move(stats)) {}

  FailureKind kind() const { return kind_; }
  const Trajectory& partial() const { return partial_; }
  const std::optional<StepStats>& stats() const { return stats_; }

 private:
  FailureKind kind_;
  Trajectory partial_;
  std::optional<StepStats> stats_;
};

class ColdStartError : public Error {
 public:
  ColdStartError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class HorizonExhaustedError : public Error {
 public:
  using Error::Error;
};

class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, StepStats stats) : Error(what), stats_(std::move(stats)) {}
  const StepStats& stats() const { return stats_; }

 private:
  StepStats stats_;
};

struct ColdStartResult {
  HorizonSolution solution;
  std::size_t iterations = 0;
  std::size_t gmres_iterations = 0;
  double residual = 0.0;
};

/// Stage triples from the model's initializer, nu = 0, p = config.p0.
HorizonSolution initial_guess(const ModelDefinition& model, const MpcConfig& config);

/// Newton from initial_guess() until ||F|| <= 10 * gmres_tol. The horizon
/// length is held at p0 until the remaining rows converge, then released
/// (predictor-corrector on p, plain damped Newton as the fallback). Each phase
/// gets `cold_start_max_iter` Newton iterations; `iterations` counts them all.
ColdStartResult cold_start(const ModelDefinition& model, const MpcConfig& config, std::span<const double> x0);

/// Reinterpolates the stage triples of the previous horizon onto the horizon
/// [t + dt, t + p_prev]; p_new = p_prev - dt, nu kept.
HorizonSolution shift_horizon(const HorizonSolution& prev, double dt);

struct RefineResult {
  HorizonSolution solution;
  StepStats stats;
};

/// k Newton-Krylov refinements of U at (x, t). Throws StepFailure when the
/// residual becomes non-finite or exceeds the divergence threshold.
RefineResult newton_refine(const ModelDefinition& model, HorizonSolution U, std::span<const double> x, double t,
                           std::size_t k, const MpcConfig& config);

/// Closed-loop simulation. Throws SimulationFailure with the partial trajectory.
Trajectory simulate(const MpcConfig& config);

}  // namespace nkmpc
