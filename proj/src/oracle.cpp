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

#include "nkmpc/oracle.hpp"

#include <cmath>

namespace nkmpc::oracle {

double switching_function(PlantState s) { return s.x + 0.5 * s.y * std::abs(s.y); }

double bang_bang_control(PlantState s) {
  const double delta = switching_function(s);
  if (delta < -kCurveTolerance) return 1.0;
  if (delta > kCurveTolerance) return -1.0;
  if (s.y > 0.0) return -1.0;
  if (s.y < 0.0) return 1.0;
  return 0.0;
}

double min_time(PlantState s) {
  const double delta = switching_function(s);
  if (delta < -kCurveTolerance) return 2.0 * std::sqrt(0.5 * s.y * s.y - s.x) - s.y;
  if (delta > kCurveTolerance) return 2.0 * std::sqrt(0.5 * s.y * s.y + s.x) + s.y;
  return std::abs(s.y);
}

}  // namespace nkmpc::oracle
