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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nkmpc/mpc.hpp"

namespace nkmpc::harness {

/// Aggregates recomputable from the per-step trajectory rows.
struct RunAggregates {
  std::size_t solved_steps = 0;           // warm steps (step >= 1) with a horizon solve
  std::size_t total_gmres_iterations = 0;  // summed over warm steps
  double avg_gmres_iterations = 0.0;       // per warm step
  double final_state_norm = 0.0;           // distance of the last state to the target

  bool operator==(const RunAggregates&) const = default;
};

struct RunRecord {
  MpcConfig config;
  Trajectory trajectory;
  bool success = false;
  std::string failure_kind;  // empty on success
  std::string message;
  RunAggregates aggregates;
  double total_wall_seconds = 0.0;
  double avg_wall_ms_per_step = 0.0;
};

RunAggregates compute_aggregates(const Trajectory& traj, const std::array<double, 2>& target);

/// Runs simulate() and captures a failure together with its partial trajectory.
RunRecord run(const MpcConfig& config);

// CSV columns: step,t,x,y,u,p,res_before,res_after,gmres_iters. Missing values
// (no control on the last row, no solve) are written as empty fields.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

nlohmann::json config_to_json(const MpcConfig& config);
/// Applies the keys present in `j` on top of `base`; key names mirror the CLI flags.
MpcConfig config_from_json(const nlohmann::json& j, MpcConfig base = {});

nlohmann::json summary_json(const RunRecord& record);

struct RunFiles {
  std::filesystem::path trajectory_csv;
  std::filesystem::path summary_json;
  std::filesystem::path nominal_csv;
};

/// Writes trajectory.csv, summary.json and nominal.csv (analytic bang-bang
/// trajectory for comparison plots) into `dir`, using `prefix` for file names.
RunFiles write_run(const RunRecord& record, const std::filesystem::path& dir, const std::string& prefix = "");

/// Reads a trajectory CSV and summary JSON pair and checks that the stored
/// aggregates equal a recomputation from the CSV rows. Throws Error on mismatch.
RunAggregates load_and_check(const std::filesystem::path& csv, const std::filesystem::path& summary);

struct BenchmarkRow {
  std::string id;
  bool success = false;
  double avg_iterations = 0.0;
  double avg_wall_ms = 0.0;
  double speedup = 0.0;  // baseline avg iterations / this row's avg iterations
  std::string failure_kind;
};

/// Runs every config; the first one is the baseline for the speedup column.
std::vector<BenchmarkRow> run_benchmark(const std::vector<std::pair<std::string, MpcConfig>>& configs);
void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRow>& rows);

struct ScalingPoint {
  std::size_t horizon = 0;
  double assemble_seconds = 0.0;
  double factorize_seconds = 0.0;
  double apply_seconds = 0.0;
  double total_seconds = 0.0;  // median of assemble + factorize + apply
  std::size_t memory_bytes = 0;
  std::size_t flops = 0;
};

struct ScalingReport {
  std::vector<ScalingPoint> points;
  std::optional<double> time_slope;
  std::optional<double> memory_slope;
  std::optional<double> flop_slope;
};

/// Least-squares slope of log(y) against log(x); needs at least two points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Median preconditioner setup + factorize + apply time per horizon size,
/// at the cold-start solution of `base`.
ScalingReport run_scaling(const MpcConfig& base, const std::vector<std::size_t>& horizons, std::size_t repeats);
void write_scaling_csv(std::ostream& os, const ScalingReport& report);

}  // namespace nkmpc::harness
