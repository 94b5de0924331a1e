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

// Sparse preconditioner for the horizon Jacobian F_U.
//
//   M = [ M11  M12 ]     M11 = diag(B_0, ..., B_{N-1}),  B_i = dtau * d2H/dw_i^2
//       [ M21  M22 ]     M21 = M12^T
//
// where w_i is the stage triple (u_i, ud_i, mu_i). The border [M12; M22]
// holds the l = n_psi + 1 trailing Jacobian columns, probed through the
// finite-difference operator. Factorization is the block LU
//
//   M = [ I              0 ] [ M11  M12 ]      S22 = M22 - M21 M11^{-1} M12
//       [ M21 M11^{-1}   I ] [ 0    S22 ]
//
// and costs O(N) work and memory.

#include <array>
#include <cstddef>
#include <span>

#include "nkmpc/krylov.hpp"
#include "nkmpc/linalg.hpp"
#include "nkmpc/ocp.hpp"

namespace nkmpc {

inline constexpr double kMinBlockDeterminant = 1e-14;

class SparsePreconditioner {
 public:
  SparsePreconditioner() = default;
  /// Zero blocks and border; `block_size` is the stage width, `border` is l.
  SparsePreconditioner(std::size_t horizon, std::size_t block_size, std::size_t border);

  std::size_t horizon() const { return horizon_; }
  std::size_t block_size() const { return block_size_; }
  std::size_t border_width() const { return border_; }
  std::size_t dimension() const { return horizon_ * block_size_ + border_; }

  std::span<double> block(std::size_t i) {
    return {blocks_.data() + i * block_size_ * block_size_, block_size_ * block_size_};
  }
  std::span<const double> block(std::size_t i) const {
    return {blocks_.data() + i * block_size_ * block_size_, block_size_ * block_size_};
  }

  /// (N*w + l) x l matrix [M12; M22].
  DenseMatrix& border() { return border_cols_; }
  const DenseMatrix& border() const { return border_cols_; }

  Vector multiply(std::span<const double> v) const;
  DenseMatrix to_dense() const;

  /// Raises SingularBlockError when any |det B_i| is below the threshold.
  void check_blocks(double min_det = kMinBlockDeterminant) const;

  std::size_t memory_bytes() const;

 private:
  std::size_t horizon_ = 0;
  std::size_t block_size_ = 0;
  std::size_t border_ = 0;
  Vector blocks_;
  DenseMatrix border_cols_;
};

class PreconditionerFactors {
 public:
  const SparsePreconditioner& matrix() const { return m_; }
  std::span<const double> block_inverse(std::size_t i) const {
    const std::size_t w2 = m_.block_size() * m_.block_size();
    return {block_inverses_.data() + i * w2, w2};
  }
  /// M11^{-1} M12, (N*w) x l.
  const DenseMatrix& strip() const { return strip_; }
  const DenseMatrix& schur() const { return schur_; }

  /// Dense block factors [I 0; M21 M11^{-1} I] and [M11 M12; 0 S22].
  DenseMatrix lower_dense() const;
  DenseMatrix upper_dense() const;

  /// Multiply-add count of factorize plus all apply_inverse calls so far.
  std::size_t flops() const { return flops_; }
  std::size_t memory_bytes() const;

 private:
  friend PreconditionerFactors factorize(const SparsePreconditioner& m);
  friend Vector apply_inverse(const PreconditionerFactors& f, std::span<const double> r);

  SparsePreconditioner m_;
  Vector block_inverses_;
  DenseMatrix strip_;
  DenseMatrix schur_;
  DenseLu schur_lu_{DenseMatrix{}};
  mutable std::size_t flops_ = 0;
};

/// Inverse of a symmetric or general 3x3 row-major block by cofactors.
std::array<double, 9> invert3(std::span<const double> b, double* det_out = nullptr);
double det3(std::span<const double> b);

/// Stage blocks from the model's analytic stage Hessian, border by l probes
/// of `op` along the trailing unit vectors; M22 is symmetrized.
SparsePreconditioner assemble(const ModelDefinition& model, const HorizonSolution& U, std::span<const double> x_t,
                              double t, const FdOperator& op);

PreconditionerFactors factorize(const SparsePreconditioner& m);

Vector apply_inverse(const PreconditionerFactors& f, std::span<const double> r);

}  // namespace nkmpc
