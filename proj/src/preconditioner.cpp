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

#include "nkmpc/preconditioner.hpp"

#include <cmath>
#include <utility>

namespace nkmpc {

SparsePreconditioner::SparsePreconditioner(std::size_t horizon, std::size_t block_size, std::size_t border)
    : horizon_(horizon),
      block_size_(block_size),
      border_(border),
      blocks_(horizon * block_size * block_size, 0.0),
      border_cols_(horizon * block_size + border, border) {}

Vector SparsePreconditioner::multiply(std::span<const double> v) const {
  const std::size_t w = block_size_;
  const std::size_t n1 = horizon_ * w;
  Vector out(dimension(), 0.0);
  for (std::size_t i = 0; i < horizon_; ++i) {
    const auto b = block(i);
    for (std::size_t r = 0; r < w; ++r)
      for (std::size_t c = 0; c < w; ++c) out[i * w + r] += b[r * w + c] * v[i * w + c];
  }
  // [M12; M22] * v2 and M21 * v1 = M12^T v1.
  for (std::size_t r = 0; r < dimension(); ++r)
    for (std::size_t c = 0; c < border_; ++c) out[r] += border_cols_(r, c) * v[n1 + c];
  for (std::size_t c = 0; c < border_; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n1; ++r) acc += border_cols_(r, c) * v[r];
    out[n1 + c] += acc;
  }
  return out;
}

DenseMatrix SparsePreconditioner::to_dense() const {
  const std::size_t w = block_size_;
  const std::size_t n1 = horizon_ * w;
  DenseMatrix d(dimension(), dimension());
  for (std::size_t i = 0; i < horizon_; ++i) {
    const auto b = block(i);
    for (std::size_t r = 0; r < w; ++r)
      for (std::size_t c = 0; c < w; ++c) d(i * w + r, i * w + c) = b[r * w + c];
  }
  for (std::size_t r = 0; r < dimension(); ++r)
    for (std::size_t c = 0; c < border_; ++c) d(r, n1 + c) = border_cols_(r, c);
  for (std::size_t r = 0; r < n1; ++r)
    for (std::size_t c = 0; c < border_; ++c) d(n1 + c, r) = border_cols_(r, c);
  return d;
}

void SparsePreconditioner::check_blocks(double min_det) const {
  for (std::size_t i = 0; i < horizon_; ++i) {
    double det = 0.0;
    if (block_size_ == 3) {
      det = det3(block(i));
    } else {
      DenseMatrix b(block_size_, block_size_);
      std::copy(block(i).begin(), block(i).end(), b.row(0).begin());
      try {
        DenseLu lu(b);
        det = lu.min_pivot();
      } catch (const SingularMatrixError& e) {
        det = e.pivot();
      }
    }
    if (!(std::abs(det) >= min_det)) throw SingularBlockError(i, det);
  }
}

std::size_t SparsePreconditioner::memory_bytes() const {
  return (blocks_.size() + border_cols_.data().size()) * sizeof(double);
}

double det3(std::span<const double> b) {
  return b[0] * (b[4] * b[8] - b[5] * b[7]) - b[1] * (b[3] * b[8] - b[5] * b[6]) +
         b[2] * (b[3] * b[7] - b[4] * b[6]);
}

std::array<double, 9> invert3(std::span<const double> b, double* det_out) {
  const double c00 = b[4] * b[8] - b[5] * b[7];
  const double c01 = b[5] * b[6] - b[3] * b[8];
  const double c02 = b[3] * b[7] - b[4] * b[6];
  const double det = b[0] * c00 + b[1] * c01 + b[2] * c02;
  if (det_out != nullptr) *det_out = det;
  const double inv = 1.0 / det;
  // Adjugate (transposed cofactor matrix) scaled by 1/det.
  return {c00 * inv,
          (b[2] * b[7] - b[1] * b[8]) * inv,
          (b[1] * b[5] - b[2] * b[4]) * inv,
          c01 * inv,
          (b[0] * b[8] - b[2] * b[6]) * inv,
          (b[2] * b[3] - b[0] * b[5]) * inv,
          c02 * inv,
          (b[1] * b[6] - b[0] * b[7]) * inv,
          (b[0] * b[4] - b[1] * b[3]) * inv};
}

SparsePreconditioner assemble(const ModelDefinition& model, const HorizonSolution& U, std::span<const double> x_t,
                              double /*t*/, const FdOperator& op) {
  if (!model.stage_hessian) throw ConfigError("model " + model.name + " provides no stage Hessian");
  const auto& d = model.dims;
  const std::size_t n = U.horizon();
  const std::size_t w = d.stage_width();
  const std::size_t l = d.border_width();
  const std::size_t dim = U.size();
  if (op.dimension() != dim) throw ConfigError("operator dimension does not match horizon solution");

  SparsePreconditioner m(n, w, l);
  const double dtau = U.step();

  const RecursionBuffers buf = backward_recursion(model, forward_recursion(model, x_t, U), U);
  for (std::size_t i = 0; i < n; ++i) {
    const StagePoint sp{static_cast<double>(i) * dtau, buf.x(i), buf.lambda(i + 1), U.u(i), U.ud(i), U.mu(i), U.p()};
    const Vector hess = model.stage_hessian(sp);
    auto blk = m.block(i);
    for (std::size_t k = 0; k < w * w; ++k) blk[k] = hess[k] * dtau;
  }
  m.check_blocks();

  Vector e(dim, 0.0);
  for (std::size_t c = 0; c < l; ++c) {
    e[n * w + c] = 1.0;
    const Vector col = op.apply(e);
    e[n * w + c] = 0.0;
    for (std::size_t r = 0; r < dim; ++r) m.border()(r, c) = col[r];
  }
  // Only the columns are probed; the corner is symmetrized and M21 mirrors M12.
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = a + 1; b < l; ++b) {
      const double avg = 0.5 * (m.border()(n * w + a, b) + m.border()(n * w + b, a));
      m.border()(n * w + a, b) = avg;
      m.border()(n * w + b, a) = avg;
    }
  return m;
}

PreconditionerFactors factorize(const SparsePreconditioner& m) {
  PreconditionerFactors f;
  f.m_ = m;
  const std::size_t n = m.horizon();
  const std::size_t w = m.block_size();
  const std::size_t l = m.border_width();
  const std::size_t n1 = n * w;

  f.block_inverses_.resize(n * w * w);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = std::span<double>(f.block_inverses_.data() + i * w * w, w * w);
    if (w == 3) {
      double det = 0.0;
      const auto inv = invert3(m.block(i), &det);
      if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw SingularBlockError(i, det);
      std::copy(inv.begin(), inv.end(), dst.begin());
      f.flops_ += 40;
    } else {
      DenseMatrix b(w, w);
      std::copy(m.block(i).begin(), m.block(i).end(), b.row(0).begin());
      const DenseLu lu(std::move(b));
      Vector e(w, 0.0);
      for (std::size_t c = 0; c < w; ++c) {
        e[c] = 1.0;
        const Vector col = lu.solve(e);
        e[c] = 0.0;
        for (std::size_t r = 0; r < w; ++r) dst[r * w + c] = col[r];
      }
      f.flops_ += w * w * w * 2;
    }
  }

  // strip = M11^{-1} M12, block row by block row.
  f.strip_ = DenseMatrix(n1, l);
  for (std::size_t i = 0; i < n; ++i) {
    const auto inv = f.block_inverse(i);
    for (std::size_t r = 0; r < w; ++r)
      for (std::size_t c = 0; c < l; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < w; ++k) acc += inv[r * w + k] * m.border()(i * w + k, c);
        f.strip_(i * w + r, c) = acc;
      }
  }
  f.flops_ += n1 * w * l;

  // S22 = M22 - M12^T * strip.
  f.schur_ = DenseMatrix(l, l);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) {
      double acc = m.border()(n1 + a, b);
      for (std::size_t r = 0; r < n1; ++r) acc -= m.border()(r, a) * f.strip_(r, b);
      f.schur_(a, b) = acc;
    }
  f.flops_ += n1 * l * l;

  try {
    f.schur_lu_ = DenseLu(f.schur_);
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError("singular Schur complement of the preconditioner", e.pivot());
  }
  f.flops_ += l * l * l;
  return f;
}

Vector apply_inverse(const PreconditionerFactors& f, std::span<const double> r) {
  const auto& m = f.m_;
  const std::size_t n = m.horizon();
  const std::size_t w = m.block_size();
  const std::size_t l = m.border_width();
  const std::size_t n1 = n * w;
  if (r.size() != n1 + l) throw ConfigError("preconditioner argument has wrong dimension");

  // q = M11^{-1} r1
  Vector out(n1 + l, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto inv = f.block_inverse(i);
    for (std::size_t a = 0; a < w; ++a) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w; ++k) acc += inv[a * w + k] * r[i * w + k];
      out[i * w + a] = acc;
    }
  }
  // y2 = r2 - M21 q, x2 = S22^{-1} y2
  Vector y2(r.begin() + static_cast<std::ptrdiff_t>(n1), r.end());
  for (std::size_t c = 0; c < l; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n1; ++k) acc += m.border()(k, c) * out[k];
    y2[c] -= acc;
  }
  const Vector x2 = f.schur_lu_.solve(y2);
  // x1 = q - strip * x2
  for (std::size_t k = 0; k < n1; ++k) {
    double acc = 0.0;
    for (std::size_t c = 0; c < l; ++c) acc += f.strip_(k, c) * x2[c];
    out[k] -= acc;
  }
  std::copy(x2.begin(), x2.end(), out.begin() + static_cast<std::ptrdiff_t>(n1));
  f.flops_ += n1 * w + 2 * n1 * l + l * l;
  return out;
}

DenseMatrix PreconditionerFactors::lower_dense() const {
  const std::size_t n1 = m_.horizon() * m_.block_size();
  const std::size_t l = m_.border_width();
  DenseMatrix lower = DenseMatrix::identity(n1 + l);
  // M21 M11^{-1} = (M11^{-T} M12)^T; blocks may be non-symmetric, so use the inverses directly.
  const std::size_t w = m_.block_size();
  for (std::size_t i = 0; i < m_.horizon(); ++i) {
    const auto inv = block_inverse(i);
    for (std::size_t c = 0; c < l; ++c)
      for (std::size_t k = 0; k < w; ++k) {
        double acc = 0.0;
        for (std::size_t a = 0; a < w; ++a) acc += m_.border()(i * w + a, c) * inv[a * w + k];
        lower(n1 + c, i * w + k) = acc;
      }
  }
  return lower;
}

DenseMatrix PreconditionerFactors::upper_dense() const {
  const std::size_t n1 = m_.horizon() * m_.block_size();
  const std::size_t l = m_.border_width();
  DenseMatrix upper = m_.to_dense();
  for (std::size_t a = 0; a < l; ++a) {
    for (std::size_t r = 0; r < n1; ++r) upper(n1 + a, r) = 0.0;
    for (std::size_t b = 0; b < l; ++b) upper(n1 + a, n1 + b) = schur_(a, b);
  }
  return upper;
}

std::size_t PreconditionerFactors::memory_bytes() const {
  return m_.memory_bytes() + (block_inverses_.size() + strip_.data().size() + 2 * schur_.data().size()) * sizeof(double);
}

}  // namespace nkmpc
