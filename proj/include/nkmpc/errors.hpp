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
#include <stdexcept>
#include <string>

namespace nkmpc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A recursion or residual evaluation produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t stage)
      : Error(what + " (stage " + std::to_string(stage) + ")"), stage_(stage) {}
  std::size_t stage() const { return stage_; }

 private:
  std::size_t stage_;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : Error(what + " (pivot magnitude " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  double pivot() const { return pivot_; }

 private:
  double pivot_;
};

class SingularBlockError : public Error {
 public:
  SingularBlockError(std::size_t block, double det)
      : Error("near-singular preconditioner block " + std::to_string(block) +
              " (det " + std::to_string(det) + ")"),
        block_(block),
        det_(det) {}
  std::size_t block() const { return block_; }
  double det() const { return det_; }

 private:
  std::size_t block_;
  double det_;
};

}  // namespace nkmpc
