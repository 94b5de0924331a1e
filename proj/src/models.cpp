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

#include "nkmpc/models.hpp"

#include <cmath>
#include <type_traits>

namespace nkmpc {

namespace {

// Pieces shared by both double integrator models; `alpha2` is zero for Model 1.
void fill_common(ModelDefinition& m, double w_d, double alpha2) {
  m.dynamics = [](double, std::span<const double> x, std::span<const double> u, double p) {
    return Vector{p * x[1], p * u[0]};
  };
  m.constraint = [](double, std::span<const double>, std::span<const double> u, std::span<const double> ud, double) {
    return Vector{u[0] * u[0] + ud[0] * ud[0] - 1.0};
  };
  m.dH_dx = [](const StagePoint& s) { return Vector{0.0, s.p * s.lambda[0]}; };
  m.dH_du = [alpha2](const StagePoint& s) {
    return Vector{s.p * s.lambda[1] + 2.0 * s.u[0] * s.mu[0] + alpha2 * s.p * s.u[0]};
  };
  m.dH_dud = [w_d](const StagePoint& s) { return Vector{2.0 * s.mu[0] * s.ud[0] - w_d * s.p}; };
  m.dH_dmu = [](const StagePoint& s) { return Vector{s.u[0] * s.u[0] + s.ud[0] * s.ud[0] - 1.0}; };
  m.dH_dp = [w_d, alpha2](const StagePoint& s) {
    const double u = s.u[0];
    return s.x[1] * s.lambda[0] + u * s.lambda[1] - w_d * s.ud[0] + 0.5 * alpha2 * u * u;
  };
  m.stage_hessian = [alpha2](const StagePoint& s) {
    const double u = s.u[0], ud = s.ud[0], mu = s.mu[0];
    return Vector{2.0 * mu + alpha2 * s.p, 0.0, 2.0 * u,  //
                  0.0, 2.0 * mu, 2.0 * ud,               //
                  2.0 * u, 2.0 * ud, 0.0};
  };
  m.initial_stage = [w_d](double p) { return Vector{0.0, 1.0, 0.5 * w_d * p}; };
}

}  // namespace

ModelDefinition make_model1(const Model1Params& prm) {
  if (!(prm.w_d > 0.0)) throw ConfigError("model1: w_d must be positive");
  ModelDefinition m;
  m.name = "model1";
  m.dims = kModel1Dims;
  fill_common(m, prm.w_d, 0.0);
  m.dphi_dx = [](double, std::span<const double>, double) { return Vector{0.0, 0.0}; };
  m.psi = [xf = prm.x_f, yf = prm.y_f](double, std::span<const double> x, double) {
    return Vector{x[0] - xf, x[1] - yf};
  };
  m.dpsi_dx = [](double, std::span<const double>, double) { return Vector{1.0, 0.0, 0.0, 1.0}; };
  m.terminal_dp = [](double, std::span<const double>, std::span<const double>, double) { return 1.0; };
  validate_model(m);
  return m;
}

ModelDefinition make_model2(const Model2Params& prm) {
  if (!(prm.w_d > 0.0)) throw ConfigError("model2: w_d must be positive");
  if (!(prm.alpha1 > 0.0)) throw ConfigError("model2: alpha1 must be positive");
  if (!(prm.alpha2 >= 0.0)) throw ConfigError("model2: alpha2 must be non-negative");
  ModelDefinition m;
  m.name = "model2";
  m.dims = kModel2Dims;
  fill_common(m, prm.w_d, prm.alpha2);
  m.dphi_dx = [a1 = prm.alpha1, xf = prm.x_f, yf = prm.y_f](double, std::span<const double> x, double) {
    return Vector{a1 * (x[0] - xf), a1 * (x[1] - yf)};
  };
  m.psi = [](double, std::span<const double>, double) { return Vector{}; };
  m.dpsi_dx = [](double, std::span<const double>, double) { return Vector{}; };
  m.terminal_dp = [](double, std::span<const double>, std::span<const double>, double) { return 1.0; };
  validate_model(m);
  return m;
}

ModelDefinition make_model(const ModelChoice& choice) {
  return std::visit(
      [](const auto& prm) {
        if constexpr (std::is_same_v<std::decay_t<decltype(prm)>, Model1Params>) {
          return make_model1(prm);
        } else {
          return make_model2(prm);
        }
      },
      choice);
}

ModelChoice model_from_id(std::string_view id) {
  if (id == "1" || id == "model1") return Model1Params{};
  if (id == "2" || id == "model2") return Model2Params{};
  throw ConfigError("unknown model identifier '" + std::string(id) + "'");
}

std::string model_id(const ModelChoice& choice) { return choice.index() == 0 ? "model1" : "model2"; }

double interior_weight(const ModelChoice& choice) {
  return std::visit([](const auto& prm) { return prm.w_d; }, choice);
}

std::array<double, 2> target_state(const ModelChoice& choice) {
  return std::visit([](const auto& prm) { return std::array<double, 2>{prm.x_f, prm.y_f}; }, choice);
}

void set_target_state(ModelChoice& choice, std::array<double, 2> target) {
  std::visit(
      [&](auto& prm) {
        prm.x_f = target[0];
        prm.y_f = target[1];
      },
      choice);
}

void check_params(const ModelChoice& choice) { (void)make_model(choice); }

Vector model1_residual_rows(const Model1Params& params, const HorizonSolution& U, std::span<const double> x_t,
                            double t) {
  return evaluate_F(make_model1(params), U, x_t, t);
}

Vector model2_residual_rows(const Model2Params& params, const HorizonSolution& U, std::span<const double> x_t,
                            double t) {
  return evaluate_F(make_model2(params), U, x_t, t);
}

}  // namespace nkmpc
