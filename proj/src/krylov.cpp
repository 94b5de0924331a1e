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

#include "nkmpc/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace nkmpc {

FdOperator::FdOperator(const ModelDefinition& model, HorizonSolution base, Vector x_t, double t, double h)
    : model_(&model), base_(std::move(base)), x_t_(std::move(x_t)), t_(t), h_(h), probe_(base_) {
  if (!(h_ > 0.0)) throw ConfigError("finite-difference step must be positive");
  base_residual_ = evaluate_F(*model_, base_, x_t_, t_);
}

Vector FdOperator::apply(std::span<const double> v) const {
  if (v.size() != base_.size()) throw ConfigError("operator argument has wrong dimension");
  auto probe = probe_.coeffs();
  const auto base = base_.coeffs();
  for (std::size_t k = 0; k < v.size(); ++k) probe[k] = base[k] + h_ * v[k];

  ++evaluations_;
  Vector out;
  try {
    out = evaluate_F(*model_, probe_, x_t_, t_);
  } catch (const DivergenceError& e) {
    throw OperatorDivergenceError(std::string("finite-difference operator diverged: ") + e.what());
  }
  const double inv_h = 1.0 / h_;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (out[k] - base_residual_[k]) * inv_h;
  if (!all_finite(out)) throw OperatorDivergenceError("finite-difference operator produced non-finite values");
  return out;
}

GmresResult gmres(const LinearOperator& op, std::span<const double> b, double tol, std::size_t max_iter,
                  const LinearOperator& precond) {
  if (!(tol > 0.0)) throw ConfigError("gmres: tolerance must be positive");
  if (max_iter == 0) throw ConfigError("gmres: max_iter must be at least 1");
  if (!all_finite(b)) throw ConfigError("gmres: right-hand side is not finite");

  const std::size_t n = b.size();
  auto apply_p = [&](Vector v) { return precond ? precond(v) : v; };

  GmresResult result;
  result.solution.assign(n, 0.0);
  GmresReport& rep = result.report;

  Vector r0 = apply_p(Vector(b.begin(), b.end()));
  const double beta = norm2(r0);
  rep.history.push_back(beta);
  rep.residual_norm = beta;
  if (beta <= tol) {
    rep.converged = true;
    return result;
  }

  std::vector<Vector> basis;
  basis.reserve(std::min(max_iter, n) + 1);
  for (double& v : r0) v /= beta;
  basis.push_back(std::move(r0));

  // Hessenberg columns after Givens rotation, stored column-wise.
  std::vector<Vector> hess;
  std::vector<double> cs, sn;
  Vector g{beta};

  for (std::size_t j = 0; j < max_iter; ++j) {
    Vector w = apply_p(op(basis[j]));
    const double w_in = norm2(w);
    Vector h(j + 2, 0.0);
    for (std::size_t i = 0; i <= j; ++i) {
      h[i] = dot(w, basis[i]);
      axpy(-h[i], basis[i], w);
    }
    const double wnorm = norm2(w);
    h[j + 1] = wnorm;

    for (std::size_t i = 0; i < j; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double denom = std::hypot(h[j], h[j + 1]);
    const double c = denom == 0.0 ? 1.0 : h[j] / denom;
    const double s = denom == 0.0 ? 0.0 : h[j + 1] / denom;
    cs.push_back(c);
    sn.push_back(s);
    h[j] = c * h[j] + s * h[j + 1];
    h[j + 1] = 0.0;
    g.push_back(-s * g[j]);
    g[j] = c * g[j];
    hess.push_back(std::move(h));

    rep.iterations = j + 1;
    rep.residual_norm = std::abs(g[j + 1]);
    rep.history.push_back(rep.residual_norm);

    const bool breakdown = !(wnorm > 1e-14 * w_in);
    if (rep.residual_norm <= tol || breakdown || j + 1 == max_iter) break;
    for (double& v : w) v /= wnorm;
    basis.push_back(std::move(w));
  }

  // Back substitution on the rotated (upper triangular) Hessenberg system.
  const std::size_t m = rep.iterations;
  Vector y(m, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    double acc = g[i];
    for (std::size_t k = i + 1; k < m; ++k) acc -= hess[k][i] * y[k];
    y[i] = hess[i][i] == 0.0 ? 0.0 : acc / hess[i][i];
  }
  for (std::size_t i = 0; i < m; ++i) axpy(y[i], basis[i], result.solution);

  rep.basis_size = basis.size();
  rep.converged = rep.residual_norm <= tol;
  return result;
}

DenseMatrix materialize(const LinearOperator& op, std::size_t dim) {
  if (dim > kDenseSolveLimit) {
    throw ConfigError("operator dimension " + std::to_string(dim) + " exceeds dense materialization limit");
  }
  DenseMatrix a(dim, dim);
  Vector e(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    e[k] = 1.0;
    const Vector col = op(e);
    e[k] = 0.0;
    if (col.size() != dim) throw ConfigError("operator returned a vector of the wrong dimension");
    for (std::size_t r = 0; r < dim; ++r) a(r, k) = col[r];
  }
  return a;
}

Vector dense_direct_solve(const LinearOperator& op, std::span<const double> b) {
  return DenseLu(materialize(op, b.size())).solve(b);
}

}  // namespace nkmpc
