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

#include "doctest.h"
#include "nkmpc/models.hpp"
#include "reference.hpp"

using namespace nkmpc;

TEST_SUITE("models") {

TEST_CASE("identifiers") {
  CHECK(model_id(model_from_id("1")) == "model1");
  CHECK(model_id(model_from_id("model2")) == "model2");
  CHECK_THROWS_AS(model_from_id("3"), ConfigError);
  CHECK(std::holds_alternative<Model2Params>(model_from_id("2")));
}

TEST_CASE("default parameters") {
  const Model2Params m2;
  CHECK(m2.w_d == 0.005);
  CHECK(m2.alpha1 == 1e3);
  CHECK(m2.alpha2 == 0.1);
  CHECK(interior_weight(Model1Params{}) == 0.005);
}

TEST_CASE("target state round trip") {
  ModelChoice c = Model2Params{};
  set_target_state(c, {0.25, -0.5});
  CHECK(target_state(c)[0] == 0.25);
  CHECK(target_state(c)[1] == -0.5);
}

TEST_CASE("parameter checks") {
  CHECK_THROWS_AS(check_params(Model1Params{0.0, 0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(check_params(Model2Params{0.005, -1.0, 0.1, 0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(check_params(Model2Params{0.005, 1.0, -0.1, 0.0, 0.0}), ConfigError);
  CHECK_NOTHROW(check_params(Model2Params{0.005, 1.0, 0.0, 0.0, 0.0}));
}

TEST_CASE("initial stage zeroes the dummy-variable row") {
  const auto model = make_model1({});
  const double p = 2.5;
  const Vector st = model.initial_stage(p);
  REQUIRE(st.size() == 3);
  CHECK(st[0] == 0.0);
  CHECK(st[1] == 1.0);
  CHECK(st[2] == doctest::Approx(0.005 * p / 2.0));
  HorizonSolution U(kModel1Dims, 10);
  for (std::size_t i = 0; i < 10; ++i) std::copy(st.begin(), st.end(), U.stage(i).begin());
  U.p() = p;
  const double x0[2] = {-1.0, 0.0};
  const Vector F = evaluate_F(model, U, x0, 0.0);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(F[3 * i + 1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(F[3 * i + 2] == 0.0);
  }
}

TEST_CASE("residual row wrappers agree with the model callbacks") {
  const auto flat = ref::smooth_point(6, 2, 1.5);
  const HorizonSolution U(kModel1Dims, 6, flat);
  const double x0[2] = {0.1, 0.4};
  CHECK(model1_residual_rows({}, U, x0, 0.0) == evaluate_F(make_model1({}), U, x0, 0.0));
  const auto flat2 = ref::smooth_point(6, 0, 1.5);
  const HorizonSolution U2(kModel2Dims, 6, flat2);
  CHECK(model2_residual_rows({}, U2, x0, 0.0) == evaluate_F(make_model2({}), U2, x0, 0.0));
}

TEST_CASE("stage Hessian against a central difference of the stage gradient") {
  const auto model = make_model2({});
  const double x[2] = {0.3, -0.2}, lam[2] = {1.5, -0.7};
  double w[3] = {0.4, 0.9, 0.02};
  auto grad = [&](const double* s) {
    StagePoint sp{0.1, x, lam, {s, 1}, {s + 1, 1}, {s + 2, 1}, 1.8};
    return std::array<double, 3>{model.dH_du(sp)[0], model.dH_dud(sp)[0], model.dH_dmu(sp)[0]};
  };
  StagePoint sp{0.1, x, lam, {w, 1}, {w + 1, 1}, {w + 2, 1}, 1.8};
  const Vector hess = model.stage_hessian(sp);
  for (int c = 0; c < 3; ++c) {
    double wp[3] = {w[0], w[1], w[2]}, wm[3] = {w[0], w[1], w[2]};
    wp[c] += 1e-6;
    wm[c] -= 1e-6;
    const auto gp = grad(wp), gm = grad(wm);
    for (int r = 0; r < 3; ++r) CHECK(hess[3 * r + c] == doctest::Approx((gp[r] - gm[r]) / 2e-6).epsilon(1e-7));
  }
}

}  // TEST_SUITE
