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
#include <span>
#include <vector>

#include "nkmpc/errors.hpp"

namespace nkmpc {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
bool all_finite(std::span<const double> a);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Row-major dense matrix. Only used for small or test-sized problems.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  DenseMatrix transpose() const;
  Vector multiply(std::span<const double> v) const;
  double frobenius_norm() const;

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);

/// LU factorization with partial pivoting, P·A = L·U stored in place.
///
/// Construction throws SingularMatrixError when a pivot falls below
/// n·eps·max|A|; the error carries the offending pivot magnitude.
class DenseLu {
 public:
  explicit DenseLu(DenseMatrix a);

  std::size_t size() const { return lu_.rows(); }
  Vector solve(std::span<const double> b) const;
  double min_pivot() const { return min_pivot_; }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
};

}  // namespace nkmpc
