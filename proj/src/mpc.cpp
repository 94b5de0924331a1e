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

#include "nkmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "nkmpc/preconditioner.hpp"

namespace nkmpc {

namespace {

constexpr double kMaxHorizonStep = 0.1;
constexpr int kMaxHalvings = 30;
constexpr int kCorrectorHalvings = 10;
constexpr std::size_t kCorrectorIterations = 20;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct NewtonDirection {
  Vector delta;
  GmresReport report;
  std::size_t unpreconditioned_iterations = 0;
};

std::size_t max_iterations(const MpcConfig& config, std::size_t dim) {
  return config.gmres_max_iter == 0 ? dim : config.gmres_max_iter;
}

// Solves a(dU) = -F(U) around the operator's base point. With `freeze_p`
// the horizon length is held fixed: its column and residual row are replaced
// by the identity, so the p-component of the step is zero.
NewtonDirection newton_direction(const FdOperator& op, bool precondition, const MpcConfig& config,
                                 bool freeze_p = false) {
  Vector b = op.base_residual();
  for (double& v : b) v = -v;
  const std::size_t dim = op.dimension();
  const std::size_t max_iter = max_iterations(config, dim);

  LinearOperator a = op.as_operator();
  if (freeze_p) {
    b.back() = 0.0;
    a = [&op](std::span<const double> v) {
      Vector w(v.begin(), v.end());
      w.back() = 0.0;
      Vector out = op.apply(w);
      out.back() = v.back();
      return out;
    };
  }

  NewtonDirection dir;
  if (precondition) {
    SparsePreconditioner m = assemble(op.model(), op.base_point(), op.state(), op.time(), op);
    if (freeze_p) {
      auto& border = m.border();
      const std::size_t last = border.cols() - 1;
      for (std::size_t r = 0; r < border.rows(); ++r) border(r, last) = 0.0;
      for (std::size_t c = 0; c < border.cols(); ++c) border(border.rows() - 1, c) = 0.0;
      border(border.rows() - 1, last) = 1.0;
    }
    const PreconditionerFactors factors = factorize(m);
    const LinearOperator precond = [&factors](std::span<const double> r) { return apply_inverse(factors, r); };
    GmresResult res = gmres(a, b, config.gmres_tol, max_iter, precond);
    dir.delta = std::move(res.solution);
    dir.report = std::move(res.report);
    if (config.compare_unpreconditioned) {
      dir.unpreconditioned_iterations = gmres(a, b, config.gmres_tol, max_iter).report.iterations;
    }
  } else {
    GmresResult res = gmres(a, b, config.gmres_tol, max_iter);
    dir.delta = std::move(res.solution);
    dir.report = std::move(res.report);
    dir.unpreconditioned_iterations = dir.report.iterations;
  }
  return dir;
}

double plant_distance(const TrajectoryPoint& pt, const std::array<double, 2>& target) {
  return std::hypot(pt.x - target[0], pt.y - target[1]);
}

}  // namespace

void MpcConfig::validate() const {
  check_params(model);
  if (horizon < 2) throw ConfigError("horizon grid size must be at least 2");
  if (dt && !(*dt > 0.0)) throw ConfigError("system time step must be positive");
  if (refinements < 1) throw ConfigError("at least one Newton refinement per step is required");
  if (!(fd_step > 0.0)) throw ConfigError("finite-difference step must be positive");
  if (!(gmres_tol > 0.0)) throw ConfigError("GMRES tolerance must be positive");
  if (!(p0 > 0.0)) throw ConfigError("initial horizon guess must be positive");
  if (cold_start_max_iter < 1) throw ConfigError("cold-start iteration cap must be positive");
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence threshold must be positive");
  if (!(terminal_radius > 0.0)) throw ConfigError("terminal radius must be positive");
  if (!std::isfinite(x0[0]) || !std::isfinite(x0[1])) throw ConfigError("initial state must be finite");
}

std::string to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::cold_start:
      return "cold_start";
    case FailureKind::step_divergence:
      return "step_divergence";
    case FailureKind::horizon_exhausted:
      return "horizon_exhausted";
  }
  return "unknown";
}

HorizonSolution initial_guess(const ModelDefinition& model, const MpcConfig& config) {
  if (!model.initial_stage) throw ConfigError("model " + model.name + " provides no initial stage guess");
  HorizonSolution U(model.dims, config.horizon);
  const Vector stage = model.initial_stage(config.p0);
  for (std::size_t i = 0; i < config.horizon; ++i) std::copy(stage.begin(), stage.end(), U.stage(i).begin());
  U.p() = config.p0;
  return U;
}

namespace {

using Merit = double (*)(const Vector&);

double full_merit(const Vector& r) { return norm2(r); }
// Everything but the p-row, for the fixed-horizon problem.
double fixed_merit(const Vector& r) { return norm2(std::span<const double>(r.data(), r.size() - 1)); }

double merit_at(const ModelDefinition& model, const HorizonSolution& U, const Vector& x, Merit merit) {
  try {
    return merit(evaluate_F(model, U, x, 0.0));
  } catch (const DivergenceError&) {
    return std::numeric_limits<double>::infinity();
  }
}

struct ColdStartBudget {
  std::size_t used = 0;
  std::size_t cap = 0;
  std::size_t gmres = 0;
  std::size_t total = 0;

  bool take() {
    if (used >= cap) return false;
    ++used;
    ++total;
    return true;
  }
};

// One Newton direction at U; std::nullopt when the linear solve fails.
std::optional<Vector> cold_direction(const ModelDefinition& model, const MpcConfig& config, const Vector& x,
                                     const HorizonSolution& U, bool freeze_p, ColdStartBudget& budget) {
  const FdOperator op(model, U, x, 0.0, config.fd_step);
  try {
    NewtonDirection dir = newton_direction(op, true, config, freeze_p);
    budget.gmres += dir.report.iterations;
    return std::move(dir.delta);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Tries steps alpha0, alpha0/2, ... and keeps the first trial point that
// passes `accept` (which may modify the trial).
template <typename Accept>
bool halving_search(HorizonSolution& U, const Vector& delta, double alpha0, int max_halvings, Accept&& accept) {
  double alpha = alpha0;
  for (int k = 0; k < max_halvings; ++k, alpha *= 0.5) {
    HorizonSolution trial = U;
    axpy(alpha, delta, trial.coeffs());
    if (!(trial.p() > 0.0)) continue;
    if (accept(trial)) {
      U = std::move(trial);
      return true;
    }
  }
  return false;
}

// Damped Newton on the fixed-horizon problem (p frozen).
bool solve_fixed_horizon(const ModelDefinition& model, const MpcConfig& config, const Vector& x, double target,
                         HorizonSolution& U, ColdStartBudget& budget) {
  double norm = merit_at(model, U, x, fixed_merit);
  if (!std::isfinite(norm)) return false;
  while (norm > target) {
    if (!budget.take()) return false;
    const auto delta = cold_direction(model, config, x, U, true, budget);
    if (!delta) return false;
    const bool ok = halving_search(U, *delta, 1.0, kMaxHalvings, [&](const HorizonSolution& trial) {
      const double m = merit_at(model, trial, x, fixed_merit);
      if (!(m < norm)) return false;
      norm = m;
      return true;
    });
    if (!ok) return false;
  }
  return true;
}

double p_step_limit(const HorizonSolution& U, const Vector& delta) {
  const double dp = std::abs(delta.back());
  const double cap = kMaxHorizonStep * U.p();
  return dp > cap ? cap / dp : 1.0;
}

// Damped Newton on the full system.
bool solve_plain(const ModelDefinition& model, const MpcConfig& config, const Vector& x, double target,
                 HorizonSolution& U, ColdStartBudget& budget) {
  double norm = merit_at(model, U, x, full_merit);
  while (norm > target) {
    if (!budget.take()) return false;
    const auto delta = cold_direction(model, config, x, U, false, budget);
    if (!delta) return false;
    const bool ok = halving_search(U, *delta, p_step_limit(U, *delta), kMaxHalvings, [&](const HorizonSolution& trial) {
      const double m = merit_at(model, trial, x, full_merit);
      if (!(m < norm)) return false;
      norm = m;
      return true;
    });
    if (!ok) return false;
  }
  return true;
}

// Full Newton steps as predictors, each corrected back onto the
// fixed-horizon solution set; a step is kept when the p-row shrinks.
bool solve_predictor_corrector(const ModelDefinition& model, const MpcConfig& config, const Vector& x, double target,
                               HorizonSolution& U, ColdStartBudget& budget) {
  double norm = merit_at(model, U, x, full_merit);
  while (norm > target) {
    if (!budget.take()) return false;
    const auto delta = cold_direction(model, config, x, U, false, budget);
    if (!delta) return false;
    const bool ok = halving_search(U, *delta, p_step_limit(U, *delta), kCorrectorHalvings, [&](HorizonSolution& trial) {
      ColdStartBudget inner{0, kCorrectorIterations, 0};
      const bool corrected = solve_fixed_horizon(model, config, x, target, trial, inner);
      budget.total += inner.total;
      budget.gmres += inner.gmres;
      if (!corrected) return false;
      const double m = merit_at(model, trial, x, full_merit);
      if (!(m < norm)) return false;
      norm = m;
      return true;
    });
    if (!ok) return false;
  }
  return true;
}

}  // namespace

ColdStartResult cold_start(const ModelDefinition& model, const MpcConfig& config, std::span<const double> x0) {
  const Vector x(x0.begin(), x0.end());
  const double target = 10.0 * config.gmres_tol;
  ColdStartBudget budget{0, config.cold_start_max_iter, 0};

  // The initial guess can sit on a singular Jacobian, so the fixed-horizon
  // problem at p = p0 is solved first. The horizon length is then released.
  HorizonSolution fixed = initial_guess(model, config);
  if (!solve_fixed_horizon(model, config, x, target, fixed, budget)) {
    const double norm = merit_at(model, fixed, x, full_merit);
    throw ColdStartError("cold start failed at the fixed horizon p0, residual " + std::to_string(norm), norm);
  }

  // Predictor-corrector first; plain damped Newton from the same point when
  // it stalls. Each strategy gets its own iteration budget.
  HorizonSolution U = fixed;
  budget.used = 0;
  bool ok = solve_predictor_corrector(model, config, x, target, U, budget);
  if (!ok) {
    U = fixed;
    budget.used = 0;
    ok = solve_plain(model, config, x, target, U, budget);
  }
  const double norm = merit_at(model, U, x, full_merit);
  if (!ok) throw ColdStartError("cold start did not converge, residual " + std::to_string(norm), norm);
  return ColdStartResult{std::move(U), budget.total, budget.gmres, norm};
}

HorizonSolution shift_horizon(const HorizonSolution& prev, double dt) {
  const double p_prev = prev.p();
  if (!(p_prev > dt)) {
    throw HorizonExhaustedError("horizon exhausted: p = " + std::to_string(p_prev) + " <= dt = " + std::to_string(dt));
  }
  const std::size_t n = prev.horizon();
  const double p_new = p_prev - dt;
  const double nd = static_cast<double>(n);

  HorizonSolution next = prev;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = static_cast<double>(i) / nd;
    // Position on the old grid, in units of old stage nodes.
    double s = (dt + tau * p_new) / p_prev * nd;
    if (std::abs(s - std::round(s)) <= 1e-12) s = std::round(s);
    auto dst = next.stage(i);
    if (s >= nd - 1.0) {
      const auto src = prev.stage(n - 1);
      std::copy(src.begin(), src.end(), dst.begin());
      continue;
    }
    const auto k = static_cast<std::size_t>(std::floor(s));
    const double frac = s - static_cast<double>(k);
    const auto a = prev.stage(k);
    const auto b = prev.stage(k + 1);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = frac == 0.0 ? a[c] : (1.0 - frac) * a[c] + frac * b[c];
  }
  next.p() = p_new;
  return next;
}

RefineResult newton_refine(const ModelDefinition& model, HorizonSolution U, std::span<const double> x, double t,
                           std::size_t k, const MpcConfig& config) {
  if (k < 1) throw ConfigError("newton_refine needs k >= 1");
  const auto start = std::chrono::steady_clock::now();
  const Vector state(x.begin(), x.end());

  StepStats stats;
  stats.t = t;
  auto fail = [&](const std::string& why) {
    stats.p = U.p();
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw StepFailure(why, stats);
  };

  for (std::size_t r = 0; r < k; ++r) {
    std::optional<FdOperator> op;
    try {
      op.emplace(model, U, state, t, config.fd_step);
    } catch (const DivergenceError& e) {
      stats.residual_after = std::numeric_limits<double>::infinity();
      fail(std::string("residual diverged: ") + e.what());
    }
    const double bnorm = norm2(op->base_residual());
    if (r == 0) stats.residual_before = bnorm;
    if (!(bnorm <= config.divergence_threshold)) {
      stats.residual_after = bnorm;
      fail("residual norm " + std::to_string(bnorm) + " exceeds divergence threshold");
    }

    NewtonDirection dir;
    try {
      dir = newton_direction(*op, config.preconditioning, config);
    } catch (const Error& e) {
      stats.residual_after = bnorm;
      fail(std::string("linear solve failed: ") + e.what());
    }
    stats.refinement_iterations.push_back(dir.report.iterations);
    stats.unpreconditioned_iterations.push_back(dir.unpreconditioned_iterations);
    stats.gmres_iterations += dir.report.iterations;
    stats.gmres_converged = stats.gmres_converged && dir.report.converged;
    axpy(1.0, dir.delta, U.coeffs());
  }

  try {
    stats.residual_after = norm2(evaluate_F(model, U, state, t));
  } catch (const DivergenceError& e) {
    stats.residual_after = std::numeric_limits<double>::infinity();
    fail(std::string("residual diverged: ") + e.what());
  }
  if (!(stats.residual_after <= config.divergence_threshold)) {
    fail("residual norm " + std::to_string(stats.residual_after) + " exceeds divergence threshold");
  }
  stats.p = U.p();
  stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(U), std::move(stats)};
}

Trajectory simulate(const MpcConfig& config) {
  config.validate();
  const ModelDefinition model = make_model(config.model);
  const auto target = target_state(config.model);

  Trajectory traj;
  TrajectoryPoint pt;
  pt.step = 0;
  pt.t = 0.0;
  pt.x = config.x0[0];
  pt.y = config.x0[1];
  pt.u = pt.u_raw = pt.ud = kNaN;

  HorizonSolution U;
  std::size_t cs_gmres = 0;
  {
    const auto start = std::chrono::steady_clock::now();
    try {
      ColdStartResult cs = cold_start(model, config, config.x0);
      U = std::move(cs.solution);
      traj.cold_start_iterations = cs.iterations;
      traj.cold_start_residual = cs.residual;
      cs_gmres = cs.gmres_iterations;
    } catch (const ColdStartError& e) {
      traj.points.push_back(pt);
      throw SimulationFailure(FailureKind::cold_start, e.what(), traj);
    }
    traj.p0 = U.p();
    traj.dt = config.dt.value_or(traj.p0 / static_cast<double>(std::max<std::size_t>(config.steps, 1)));
    StepStats st;
    st.residual_before = norm2(evaluate_F(model, initial_guess(model, config), config.x0, 0.0));
    st.residual_after = traj.cold_start_residual;
    st.gmres_iterations = cs_gmres;
    st.p = U.p();
    st.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    pt.stats = st;
  }
  const double dt = traj.dt;

  for (std::size_t j = 0;; ++j) {
    if (j > 0) {
      // The previous row holds the control applied over [t_{j-1}, t_j].
      const TrajectoryPoint& prev = traj.points.back();
      pt = TrajectoryPoint{};
      pt.step = j;
      pt.t = static_cast<double>(j) * dt;
      pt.x = prev.x + dt * prev.y;
      pt.y = prev.y + dt * prev.u;
      pt.u = pt.u_raw = pt.ud = kNaN;

      if (j == config.steps) {
        traj.points.push_back(pt);
        break;
      }
      if (U.p() <= 2.0 * dt) {
        traj.points.push_back(pt);
        traj.horizon_exhausted = true;
        if (plant_distance(pt, target) <= config.terminal_radius) break;
        throw SimulationFailure(FailureKind::horizon_exhausted,
                                "horizon exhausted at step " + std::to_string(j) + " away from the target", traj);
      }

      HorizonSolution warm = config.shifting ? shift_horizon(U, dt) : U;
      const double state[2] = {pt.x, pt.y};
      try {
        RefineResult rr = newton_refine(model, std::move(warm), state, pt.t, config.refinements, config);
        U = std::move(rr.solution);
        rr.stats.step = j;
        pt.stats = std::move(rr.stats);
      } catch (const StepFailure& e) {
        StepStats st = e.stats();
        st.step = j;
        traj.points.push_back(pt);
        throw SimulationFailure(FailureKind::step_divergence,
                                "step " + std::to_string(j) + " failed: " + e.what(), traj, st);
      }
    } else if (config.steps == 0) {
      traj.points.push_back(pt);
      break;
    }

    pt.u_raw = U.coeffs()[0];
    pt.ud = U.ud(0)[0];
    pt.u = std::clamp(pt.u_raw, -1.0, 1.0);
    traj.points.push_back(pt);
  }
  return traj;
}

}  // namespace nkmpc
