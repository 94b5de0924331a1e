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

#include "nkmpc/ocp.hpp"

#include <string>
#include <utility>

namespace nkmpc {

namespace {

void expect_size(const Vector& v, std::size_t expected, const std::string& what) {
  if (v.size() != expected) {
    throw ConfigError("model callback " + what + " returned " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(expected));
  }
}

template <typename Fn>
void require(const Fn& fn, const std::string& what) {
  if (!fn) throw ConfigError("model is missing callback " + what);
}

StagePoint stage_point(const HorizonSolution& U, const RecursionBuffers& buf, std::size_t i, double dtau) {
  return StagePoint{static_cast<double>(i) * dtau, buf.x(i), buf.lambda(i + 1), U.u(i), U.ud(i), U.mu(i), U.p()};
}

void check_shape(const ModelDefinition& model, const HorizonSolution& U) {
  const auto& d = model.dims;
  const auto& ud = U.dims();
  if (d.n_u != ud.n_u || d.n_d != ud.n_d || d.n_c != ud.n_c || d.n_psi != ud.n_psi) {
    throw ConfigError("horizon solution layout does not match model " + model.name);
  }
  if (U.horizon() == 0) throw ConfigError("horizon grid size must be positive");
}

}  // namespace

void validate_model(const ModelDefinition& model) {
  require(model.dynamics, "dynamics");
  require(model.constraint, "constraint");
  require(model.dH_dx, "dH_dx");
  require(model.dH_du, "dH_du");
  require(model.dH_dud, "dH_dud");
  require(model.dH_dmu, "dH_dmu");
  require(model.dH_dp, "dH_dp");
  require(model.dphi_dx, "dphi_dx");
  require(model.psi, "psi");
  require(model.dpsi_dx, "dpsi_dx");
  require(model.terminal_dp, "terminal_dp");

  const auto& d = model.dims;
  if (d.n_x == 0 || d.n_u == 0) throw ConfigError("model must have at least one state and one control");

  const Vector x(d.n_x, 0.0), lam(d.n_x, 0.0), u(d.n_u, 0.0), ud(d.n_d, 0.0), mu(d.n_c, 0.0), nu(d.n_psi, 0.0);
  const double p = 1.0;
  const StagePoint sp{0.0, x, lam, u, ud, mu, p};

  expect_size(model.dynamics(0.0, x, u, p), d.n_x, "dynamics");
  expect_size(model.constraint(0.0, x, u, ud, p), d.n_c, "constraint");
  expect_size(model.dH_dx(sp), d.n_x, "dH_dx");
  expect_size(model.dH_du(sp), d.n_u, "dH_du");
  expect_size(model.dH_dud(sp), d.n_d, "dH_dud");
  expect_size(model.dH_dmu(sp), d.n_c, "dH_dmu");
  expect_size(model.dphi_dx(1.0, x, p), d.n_x, "dphi_dx");
  expect_size(model.psi(1.0, x, p), d.n_psi, "psi");
  expect_size(model.dpsi_dx(1.0, x, p), d.n_psi * d.n_x, "dpsi_dx");
  (void)model.dH_dp(sp);
  (void)model.terminal_dp(1.0, x, nu, p);
  if (model.stage_hessian) {
    expect_size(model.stage_hessian(sp), d.stage_width() * d.stage_width(), "stage_hessian");
  }
  if (model.initial_stage) expect_size(model.initial_stage(p), d.stage_width(), "initial_stage");
}

HorizonSolution::HorizonSolution(const ProblemDims& dims, std::size_t horizon)
    : dims_(dims), horizon_(horizon), coeffs_(dims.flat_size(horizon), 0.0) {}

HorizonSolution::HorizonSolution(const ProblemDims& dims, std::size_t horizon, Vector coeffs)
    : dims_(dims), horizon_(horizon), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != dims_.flat_size(horizon_)) {
    throw ConfigError("horizon solution has " + std::to_string(coeffs_.size()) + " coefficients, expected " +
                      std::to_string(dims_.flat_size(horizon_)));
  }
}

RecursionBuffers forward_recursion(const ModelDefinition& model, std::span<const double> x_t,
                                   const HorizonSolution& U) {
  check_shape(model, U);
  const std::size_t n = U.horizon();
  const std::size_t nx = model.dims.n_x;
  if (x_t.size() != nx) throw ConfigError("current state has wrong dimension");
  const double dtau = U.step();

  RecursionBuffers buf(n, nx);
  std::copy(x_t.begin(), x_t.end(), buf.x(0).begin());
  if (!all_finite(buf.x(0))) throw DivergenceError("non-finite state", 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector f = model.dynamics(static_cast<double>(i) * dtau, buf.x(i), U.u(i), U.p());
    auto next = buf.x(i + 1);
    for (std::size_t k = 0; k < nx; ++k) next[k] = buf.x(i)[k] + f[k] * dtau;
    if (!all_finite(next)) throw DivergenceError("non-finite state in forward recursion", i + 1);
  }
  return buf;
}

RecursionBuffers backward_recursion(const ModelDefinition& model, RecursionBuffers buf, const HorizonSolution& U) {
  check_shape(model, U);
  const std::size_t n = U.horizon();
  const std::size_t nx = model.dims.n_x;
  const std::size_t npsi = model.dims.n_psi;
  const double dtau = U.step();

  // Terminal costate.
  {
    const auto xn = buf.x(n);
    Vector lam = model.dphi_dx(1.0, xn, U.p());
    if (npsi > 0) {
      const Vector jac = model.dpsi_dx(1.0, xn, U.p());
      const auto nu = U.nu();
      for (std::size_t r = 0; r < npsi; ++r)
        for (std::size_t k = 0; k < nx; ++k) lam[k] += jac[r * nx + k] * nu[r];
    }
    std::copy(lam.begin(), lam.end(), buf.lambda(n).begin());
    if (!all_finite(buf.lambda(n))) throw DivergenceError("non-finite terminal costate", n);
  }

  for (std::size_t i = n; i-- > 0;) {
    const Vector hx = model.dH_dx(stage_point(U, buf, i, dtau));
    auto lam = buf.lambda(i);
    const auto next = buf.lambda(i + 1);
    for (std::size_t k = 0; k < nx; ++k) lam[k] = next[k] + hx[k] * dtau;
    if (!all_finite(lam)) throw DivergenceError("non-finite costate in backward recursion", i);
  }
  return buf;
}

Vector evaluate_F(const ModelDefinition& model, const HorizonSolution& U, std::span<const double> x_t, double /*t*/) {
  const RecursionBuffers buf = backward_recursion(model, forward_recursion(model, x_t, U), U);

  const auto& d = model.dims;
  const std::size_t n = U.horizon();
  const std::size_t w = d.stage_width();
  const double dtau = U.step();

  Vector out(U.size(), 0.0);
  double p_row = model.terminal_dp(1.0, buf.x(n), U.nu(), U.p());
  for (std::size_t i = 0; i < n; ++i) {
    const StagePoint sp = stage_point(U, buf, i, dtau);
    double* row = out.data() + i * w;
    for (double v : model.dH_du(sp)) *row++ = v * dtau;
    for (double v : model.dH_dud(sp)) *row++ = v * dtau;
    for (double v : model.dH_dmu(sp)) *row++ = v * dtau;
    p_row += model.dH_dp(sp) * dtau;
    if (!all_finite(std::span<const double>(out.data() + i * w, w))) {
      throw DivergenceError("non-finite residual row", i);
    }
  }
  const Vector psi = model.psi(1.0, buf.x(n), U.p());
  std::copy(psi.begin(), psi.end(), out.begin() + static_cast<std::ptrdiff_t>(n * w));
  out.back() = p_row;
  if (!all_finite(out)) throw DivergenceError("non-finite terminal residual", n);
  return out;
}

}  // namespace nkmpc
