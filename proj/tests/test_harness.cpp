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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nkmpc/harness.hpp"

using namespace nkmpc;
using namespace nkmpc::harness;

namespace {

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || std::memcmp(&a, &b, sizeof a) == 0; }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nkmpc_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

MpcConfig short_run() {
  MpcConfig c;
  c.steps = 60;
  c.dt = 0.002;
  return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("trajectory CSV round trip is exact") {
  const auto rec = run(short_run());
  REQUIRE(rec.success);
  std::stringstream ss;
  write_trajectory_csv(ss, rec.trajectory);
  const auto back = read_trajectory_csv(ss);
  REQUIRE(back.points.size() == rec.trajectory.points.size());
  for (std::size_t k = 0; k < back.points.size(); ++k) {
    const auto& a = rec.trajectory.points[k];
    const auto& b = back.points[k];
    CHECK(a.step == b.step);
    CHECK(same(a.t, b.t));
    CHECK(same(a.x, b.x));
    CHECK(same(a.y, b.y));
    CHECK(same(a.u, b.u));
    CHECK(a.stats.has_value() == b.stats.has_value());
    if (a.stats && b.stats) {
      CHECK(same(a.stats->p, b.stats->p));
      CHECK(same(a.stats->residual_before, b.stats->residual_before));
      CHECK(same(a.stats->residual_after, b.stats->residual_after));
      CHECK(a.stats->gmres_iterations == b.stats->gmres_iterations);
    }
  }
}

TEST_CASE("CSV header") {
  MpcConfig c;
  c.steps = 0;
  std::stringstream ss;
  write_trajectory_csv(ss, run(c).trajectory);
  std::string header, row, extra;
  std::getline(ss, header);
  std::getline(ss, row);
  CHECK(header == "step,t,x,y,u,p,res_before,res_after,gmres_iters");
  CHECK(row.rfind("0,0,-1,0,", 0) == 0);
  CHECK_FALSE(std::getline(ss, extra));
}

TEST_CASE("written summary agrees with the CSV") {
  const auto rec = run(short_run());
  const auto dir = scratch("summary");
  const auto files = write_run(rec, dir);
  const auto agg = load_and_check(files.trajectory_csv, files.summary_json);
  CHECK(agg == rec.aggregates);
  CHECK(std::filesystem::exists(files.nominal_csv));

  // A tampered summary is caught.
  std::ifstream is(files.summary_json);
  auto j = nlohmann::json::parse(is);
  is.close();
  j["aggregates"]["total_gmres_iterations"] = j["aggregates"]["total_gmres_iterations"].get<std::size_t>() + 1;
  std::ofstream(files.summary_json) << j.dump();
  CHECK_THROWS_AS(load_and_check(files.trajectory_csv, files.summary_json), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("aggregates recomputed from rows") {
  const auto rec = run(short_run());
  const auto agg = compute_aggregates(rec.trajectory, {0.0, 0.0});
  std::size_t total = 0, solved = 0;
  for (const auto& pt : rec.trajectory.points)
    if (pt.step >= 1 && pt.stats) {
      total += pt.stats->gmres_iterations;
      ++solved;
    }
  CHECK(agg.total_gmres_iterations == total);
  CHECK(agg.solved_steps == solved);
  CHECK(agg.avg_gmres_iterations == static_cast<double>(total) / static_cast<double>(solved));
}

TEST_CASE("failed runs keep the partial trajectory") {
  MpcConfig c;
  c.steps = 500;
  const auto rec = run(c);
  CHECK_FALSE(rec.success);
  CHECK(rec.failure_kind == "step_divergence");
  CHECK(rec.trajectory.points.size() > 1);
  CHECK(rec.trajectory.points.size() < 501);
}

TEST_CASE("config JSON round trip") {
  MpcConfig c;
  c.model = Model2Params{0.01, 500.0, 0.2, 0.1, -0.1};
  c.horizon = 33;
  c.steps = 77;
  c.dt = 0.003;
  c.shifting = true;
  c.x0 = {0.4, -0.2};
  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.horizon == 33);
  CHECK(std::get<Model2Params>(back.model).alpha1 == 500.0);
  CHECK(back.dt.value() == 0.003);
}

TEST_CASE("identical benchmark configs give unit speedup") {
  const auto rows = run_benchmark({{"a", short_run()}, {"b", short_run()}});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].speedup == 1.0);
  CHECK(rows[1].speedup == 1.0);
  std::stringstream ss;
  write_benchmark_csv(ss, rows);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "config,success,avg_iters,avg_wall_ms_per_step,speedup,failure");
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{1.0, 2.0, 4.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(1.5));
}

TEST_CASE("single-size scaling omits the slope") {
  MpcConfig c;
  const auto rep = run_scaling(c, {40}, 3);
  CHECK(rep.points.size() == 1);
  CHECK_FALSE(rep.time_slope.has_value());
  CHECK(rep.points[0].memory_bytes > 0);
}

}  // TEST_SUITE
