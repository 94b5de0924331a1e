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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "nkmpc/models.hpp"
#include "nkmpc/ocp.hpp"
#include "reference.hpp"

using namespace nkmpc;

namespace {

HorizonSolution from_flat(const ProblemDims& dims, std::size_t N, const std::vector<double>& flat) {
  return HorizonSolution(dims, N, flat);
}

}  // namespace

TEST_SUITE("ocp") {

TEST_CASE("flat layout sizes") {
  CHECK(kModel1Dims.flat_size(20) == 63);
  CHECK(kModel2Dims.flat_size(70) == 211);
  HorizonSolution U(kModel1Dims, 4);
  CHECK(U.size() == 15);
  U.p() = 2.0;
  U.nu()[1] = -3.0;
  CHECK(U.vector()[14] == 2.0);
  CHECK(U.vector()[13] == -3.0);
  CHECK(U.stage(2).data() == U.vector().data() + 6);
  CHECK(U.step() == doctest::Approx(0.25));
}

TEST_CASE("forward recursion by hand") {
  const auto model = make_model1({});
  HorizonSolution U(kModel1Dims, 2);
  U.stage(0)[0] = 1.0;
  U.stage(1)[0] = 1.0;
  U.p() = 1.0;
  const double x0[2] = {0.0, 0.0};
  const auto buf = forward_recursion(model, x0, U);
  // dtau = 0.5: x1 = (0, 0.5), x2 = (0.25, 1).
  CHECK(buf.x(1)[0] == 0.0);
  CHECK(buf.x(1)[1] == 0.5);
  CHECK(buf.x(2)[0] == 0.25);
  CHECK(buf.x(2)[1] == 1.0);
}

TEST_CASE("backward recursion by hand") {
  const auto model = make_model1({});
  HorizonSolution U(kModel1Dims, 2);
  U.nu()[0] = 1.0;
  U.nu()[1] = 2.0;
  U.p() = 2.0;
  const double x0[2] = {0.0, 0.0};
  const auto buf = backward_recursion(model, forward_recursion(model, x0, U), U);
  // lambda_2 = nu; lambda1 constant, lambda2_i = lambda2_{i+1} + dtau * p * lambda1.
  CHECK(buf.lambda(2)[0] == 1.0);
  CHECK(buf.lambda(2)[1] == 2.0);
  CHECK(buf.lambda(1)[1] == 3.0);
  CHECK(buf.lambda(0)[1] == 4.0);
  CHECK(buf.lambda(0)[0] == 1.0);
}

TEST_CASE("model 2 terminal costate is the penalty gradient") {
  Model2Params prm;
  prm.x_f = 0.5;
  const auto model = make_model2(prm);
  HorizonSolution U(kModel2Dims, 3);
  U.p() = 1.0;
  const double x0[2] = {1.0, -1.0};
  const auto buf = backward_recursion(model, forward_recursion(model, x0, U), U);
  CHECK(buf.lambda(3)[0] == doctest::Approx(prm.alpha1 * (buf.x(3)[0] - 0.5)));
  CHECK(buf.lambda(3)[1] == doctest::Approx(prm.alpha1 * buf.x(3)[1]));
}

TEST_CASE("residual matches the independent reference") {
  for (std::size_t N : {3u, 5u, 20u}) {
    for (int which : {1, 2}) {
      const ref::Params rp = which == 1 ? ref::model1() : ref::model2();
      const auto model = which == 1 ? make_model1({}) : make_model2({});
      const auto flat = ref::smooth_point(N, ref::n_psi(rp), 1.7);
      const double x0[2] = {-0.8, 0.3};
      const Vector F = evaluate_F(model, from_flat(model.dims, N, flat), x0, 0.0);
      const auto expect = ref::residual(rp, flat, N, x0[0], x0[1]);
      REQUIRE(F.size() == expect.size());
      for (std::size_t k = 0; k < F.size(); ++k) CHECK(F[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("residual is the gradient of the reduced Lagrangian") {
  for (std::size_t N : {1u, 2u, 3u, 5u}) {
    for (int which : {1, 2}) {
      const ref::Params rp = which == 1 ? ref::model1() : ref::model2(0.005, 10.0, 0.1);
      const auto model = which == 1 ? make_model1({}) : make_model2({0.005, 10.0, 0.1, 0.0, 0.0});
      const auto flat = ref::smooth_point(N, ref::n_psi(rp), 2.3);
      const double x0[2] = {-1.0, 0.2};
      const Vector F = evaluate_F(model, from_flat(model.dims, N, flat), x0, 0.0);
      const auto grad = ref::central_gradient(
          [&](const std::vector<double>& v) { return ref::reduced_lagrangian(rp, v, N, x0[0], x0[1]); }, flat, 1e-5);
      for (std::size_t k = 0; k < F.size(); ++k) CHECK(F[k] == doctest::Approx(grad[k]).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("stage rows carry the dtau factor") {
  const auto model = make_model1({});
  for (std::size_t N : {4u, 8u}) {
    HorizonSolution U(kModel1Dims, N);
    for (std::size_t i = 0; i < N; ++i) {
      U.stage(i)[0] = 0.6;
      U.stage(i)[1] = 0.6;
    }
    U.p() = 1.0;
    const double x0[2] = {0.0, 0.0};
    const Vector F = evaluate_F(model, U, x0, 0.0);
    // u^2 + ud^2 - 1 = -0.28
    CHECK(F[2] == doctest::Approx(-0.28 / static_cast<double>(N)));
  }
}

TEST_CASE("residual evaluation is deterministic") {
  const auto model = make_model2({});
  const auto flat = ref::smooth_point(30, 0, 2.0);
  const double x0[2] = {-1.0, 0.0};
  const HorizonSolution U(kModel2Dims, 30, flat);
  const Vector a = evaluate_F(model, U, x0, 0.0);
  const Vector b = evaluate_F(model, U, x0, 0.0);
  CHECK(a == b);
}

TEST_CASE("non-finite input raises a divergence error") {
  const auto model = make_model1({});
  HorizonSolution U(kModel1Dims, 5);
  U.p() = 1.0;
  U.stage(2)[0] = std::numeric_limits<double>::quiet_NaN();
  const double x0[2] = {0.0, 0.0};
  CHECK_THROWS_AS(evaluate_F(model, U, x0, 0.0), DivergenceError);
  U.stage(2)[0] = 1e300;
  U.p() = 1e300;
  CHECK_THROWS_AS(evaluate_F(model, U, x0, 0.0), DivergenceError);
}

TEST_CASE("model validation") {
  CHECK_NOTHROW(validate_model(make_model1({})));
  CHECK_NOTHROW(validate_model(make_model2({})));
  auto broken = make_model1({});
  broken.dims.n_psi = 3;
  CHECK_THROWS_AS(validate_model(broken), ConfigError);
  auto missing = make_model2({});
  missing.dH_dp = nullptr;
  CHECK_THROWS_AS(validate_model(missing), ConfigError);
}

}  // TEST_SUITE
