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

// Closed-form time-optimal feedback for the double integrator x' = y, y' = u,
// |u| <= 1, steering to the origin. The switching curve is x = -y|y|/2.

namespace nkmpc::oracle {

struct PlantState {
  double x = 0.0;  // position
  double y = 0.0;  // velocity
};

/// Curve membership band used by bang_bang_control and min_time.
inline constexpr double kCurveTolerance = 1e-12;

/// x + y|y|/2: negative below the switching curve, positive above.
double switching_function(PlantState s);

/// +1 below the curve, -1 above, -sign(y) on it, 0 at the origin.
double bang_bang_control(PlantState s);

/// Minimum time to reach the origin.
double min_time(PlantState s);

}  // namespace nkmpc::oracle
