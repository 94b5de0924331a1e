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

// Double integrator chi'' = u, |u| <= 1, on the scaled horizon. State (x, y)
// with x = position, y = velocity; scaled dynamics
//   x_{i+1} = x_i + dtau * p * y_i,  y_{i+1} = y_i + dtau * p * u_i.
// The control bound is the equality u^2 + ud^2 = 1 with an interior-point
// reward -w_d * ud * p in the stage cost.
//
// Model 1: phi = p, hard terminal constraint psi = x_N - x_f (two multipliers).
// Model 2: phi = p + alpha1/2 |x_N - x_f|^2, extra stage cost alpha2/2 * p * u^2,
//          no terminal constraint.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "nkmpc/ocp.hpp"

namespace nkmpc {

struct Model1Params {
  double w_d = 0.005;
  double x_f = 0.0;
  double y_f = 0.0;
};

struct Model2Params {
  double w_d = 0.005;
  double alpha1 = 1e3;
  double alpha2 = 0.1;
  double x_f = 0.0;
  double y_f = 0.0;
};

using ModelChoice = std::variant<Model1Params, Model2Params>;

ModelDefinition make_model1(const Model1Params& params);
ModelDefinition make_model2(const Model2Params& params);
ModelDefinition make_model(const ModelChoice& choice);

/// "model1"/"1" or "model2"/"2"; returns the default parameters of that model.
ModelChoice model_from_id(std::string_view id);
std::string model_id(const ModelChoice& choice);

double interior_weight(const ModelChoice& choice);
std::array<double, 2> target_state(const ModelChoice& choice);
void set_target_state(ModelChoice& choice, std::array<double, 2> target);
void check_params(const ModelChoice& choice);

// Convenience wrappers returning the full residual of the corresponding model.
Vector model1_residual_rows(const Model1Params& params, const HorizonSolution& U, std::span<const double> x_t,
                            double t);
Vector model2_residual_rows(const Model2Params& params, const HorizonSolution& U, std::span<const double> x_t,
                            double t);

inline constexpr ProblemDims kModel1Dims{2, 1, 1, 1, 2};
inline constexpr ProblemDims kModel2Dims{2, 1, 1, 1, 0};

}  // namespace nkmpc
