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

#include "nkmpc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nkmpc/oracle.hpp"
#include "nkmpc/preconditioner.hpp"

namespace nkmpc::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) { return s.empty() ? kNaN : std::stod(s); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kCsvHeader = "step,t,x,y,u,p,res_before,res_after,gmres_iters";

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunAggregates compute_aggregates(const Trajectory& traj, const std::array<double, 2>& target) {
  RunAggregates agg;
  for (const auto& pt : traj.points) {
    if (pt.step == 0 || !pt.stats) continue;
    ++agg.solved_steps;
    agg.total_gmres_iterations += pt.stats->gmres_iterations;
  }
  agg.avg_gmres_iterations = agg.solved_steps == 0 ? 0.0
                                                   : static_cast<double>(agg.total_gmres_iterations) /
                                                         static_cast<double>(agg.solved_steps);
  if (!traj.points.empty()) {
    const auto& last = traj.points.back();
    agg.final_state_norm = std::hypot(last.x - target[0], last.y - target[1]);
  }
  return agg;
}

RunRecord run(const MpcConfig& config) {
  RunRecord rec;
  rec.config = config;
  const auto start = std::chrono::steady_clock::now();
  try {
    rec.trajectory = simulate(config);
    rec.success = true;
  } catch (const SimulationFailure& e) {
    rec.trajectory = e.partial();
    rec.success = false;
    rec.failure_kind = to_string(e.kind());
    rec.message = e.what();
  }
  rec.total_wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.aggregates = compute_aggregates(rec.trajectory, target_state(config.model));

  double step_wall = 0.0;
  for (const auto& pt : rec.trajectory.points)
    if (pt.step > 0 && pt.stats) step_wall += pt.stats->wall_seconds;
  rec.avg_wall_ms_per_step =
      rec.aggregates.solved_steps == 0 ? 0.0 : 1e3 * step_wall / static_cast<double>(rec.aggregates.solved_steps);
  return rec;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << kCsvHeader << '\n';
  for (const auto& pt : traj.points) {
    os << pt.step << ',' << fmt17(pt.t) << ',' << fmt17(pt.x) << ',' << fmt17(pt.y) << ',' << fmt17(pt.u) << ',';
    if (pt.stats) {
      os << fmt17(pt.stats->p) << ',' << fmt17(pt.stats->residual_before) << ',' << fmt17(pt.stats->residual_after)
         << ',' << pt.stats->gmres_iterations;
    } else {
      os << ",,,";
    }
    os << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error("trajectory CSV: unexpected header");
  Trajectory traj;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 9) throw Error("trajectory CSV: expected 9 columns in line '" + line + "'");
    TrajectoryPoint pt;
    pt.step = static_cast<std::size_t>(std::stoull(cells[0]));
    pt.t = parse_double(cells[1]);
    pt.x = parse_double(cells[2]);
    pt.y = parse_double(cells[3]);
    pt.u = parse_double(cells[4]);
    pt.u_raw = pt.ud = kNaN;
    if (!cells[8].empty()) {
      StepStats st;
      st.step = pt.step;
      st.t = pt.t;
      st.p = parse_double(cells[5]);
      st.residual_before = parse_double(cells[6]);
      st.residual_after = parse_double(cells[7]);
      st.gmres_iterations = static_cast<std::size_t>(std::stoull(cells[8]));
      pt.stats = st;
    }
    traj.points.push_back(pt);
  }
  if (traj.points.size() >= 2) traj.dt = traj.points[1].t - traj.points[0].t;
  if (!traj.points.empty() && traj.points.front().stats) traj.p0 = traj.points.front().stats->p;
  return traj;
}

nlohmann::json config_to_json(const MpcConfig& c) {
  nlohmann::json j;
  j["model"] = model_id(c.model);
  j["wd"] = interior_weight(c.model);
  if (const auto* m2 = std::get_if<Model2Params>(&c.model)) {
    j["alpha1"] = m2->alpha1;
    j["alpha2"] = m2->alpha2;
  }
  const auto xf = target_state(c.model);
  j["xf"] = {xf[0], xf[1]};
  j["x0"] = {c.x0[0], c.x0[1]};
  j["horizon"] = c.horizon;
  j["steps"] = c.steps;
  j["dt"] = c.dt ? nlohmann::json(*c.dt) : nlohmann::json(nullptr);
  j["refinements"] = c.refinements;
  j["shift"] = c.shifting;
  j["precond"] = c.preconditioning;
  j["fd_step"] = c.fd_step;
  j["tol"] = c.gmres_tol;
  j["gmres_max_iter"] = c.gmres_max_iter;
  j["p0"] = c.p0;
  j["cold_start_max_iter"] = c.cold_start_max_iter;
  j["divergence_threshold"] = c.divergence_threshold;
  j["terminal_radius"] = c.terminal_radius;
  return j;
}

MpcConfig config_from_json(const nlohmann::json& j, MpcConfig c) {
  auto as_bool = [](const nlohmann::json& v) {
    if (v.is_boolean()) return v.get<bool>();
    const auto s = v.get<std::string>();
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    throw ConfigError("expected on/off, got '" + s + "'");
  };
  if (j.contains("model")) {
    const auto& m = j["model"];
    const auto target = target_state(c.model);
    c.model = model_from_id(m.is_number() ? std::to_string(m.get<int>()) : m.get<std::string>());
    set_target_state(c.model, target);
  }
  if (j.contains("wd")) std::visit([&](auto& p) { p.w_d = j["wd"].get<double>(); }, c.model);
  if (auto* m2 = std::get_if<Model2Params>(&c.model)) {
    if (j.contains("alpha1")) m2->alpha1 = j["alpha1"].get<double>();
    if (j.contains("alpha2")) m2->alpha2 = j["alpha2"].get<double>();
  }
  if (j.contains("xf")) set_target_state(c.model, j["xf"].get<std::array<double, 2>>());
  if (j.contains("x0")) c.x0 = j["x0"].get<std::array<double, 2>>();
  if (j.contains("horizon")) c.horizon = j["horizon"].get<std::size_t>();
  if (j.contains("steps")) c.steps = j["steps"].get<std::size_t>();
  if (j.contains("dt")) c.dt = j["dt"].is_null() ? std::nullopt : std::optional<double>(j["dt"].get<double>());
  if (j.contains("refinements")) c.refinements = j["refinements"].get<std::size_t>();
  if (j.contains("shift")) c.shifting = as_bool(j["shift"]);
  if (j.contains("precond")) c.preconditioning = as_bool(j["precond"]);
  if (j.contains("fd_step")) c.fd_step = j["fd_step"].get<double>();
  if (j.contains("tol")) c.gmres_tol = j["tol"].get<double>();
  if (j.contains("gmres_max_iter")) c.gmres_max_iter = j["gmres_max_iter"].get<std::size_t>();
  if (j.contains("p0")) c.p0 = j["p0"].get<double>();
  if (j.contains("cold_start_max_iter")) c.cold_start_max_iter = j["cold_start_max_iter"].get<std::size_t>();
  if (j.contains("divergence_threshold")) c.divergence_threshold = j["divergence_threshold"].get<double>();
  if (j.contains("terminal_radius")) c.terminal_radius = j["terminal_radius"].get<double>();
  return c;
}

nlohmann::json summary_json(const RunRecord& r) {
  nlohmann::json j;
  j["config"] = config_to_json(r.config);
  j["success"] = r.success;
  j["failure_kind"] = r.failure_kind;
  j["message"] = r.message;
  j["dt"] = r.trajectory.dt;
  j["p0"] = r.trajectory.p0;
  j["cold_start_iterations"] = r.trajectory.cold_start_iterations;
  j["cold_start_residual"] = r.trajectory.cold_start_residual;
  j["horizon_exhausted"] = r.trajectory.horizon_exhausted;
  j["rows"] = r.trajectory.points.size();
  j["aggregates"] = {
      {"solved_steps", r.aggregates.solved_steps},
      {"total_gmres_iterations", r.aggregates.total_gmres_iterations},
      {"avg_gmres_iterations", r.aggregates.avg_gmres_iterations},
      {"final_state_norm", r.aggregates.final_state_norm},
      {"total_wall_seconds", r.total_wall_seconds},
      {"avg_wall_ms_per_step", r.avg_wall_ms_per_step},
  };
  return j;
}

RunFiles write_run(const RunRecord& record, const std::filesystem::path& dir, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  RunFiles files{dir / (prefix + "trajectory.csv"), dir / (prefix + "summary.json"), dir / (prefix + "nominal.csv")};
  {
    std::ofstream os(files.trajectory_csv);
    write_trajectory_csv(os, record.trajectory);
    if (!os) throw Error("cannot write " + files.trajectory_csv.string());
  }
  {
    std::ofstream os(files.summary_json);
    os << summary_json(record).dump(2) << '\n';
    if (!os) throw Error("cannot write " + files.summary_json.string());
  }
  {
    // Analytic time-optimal trajectory, Euler-integrated on the same system grid.
    std::ofstream os(files.nominal_csv);
    os << "step,t,x,y,u\n";
    const auto xf = target_state(record.config.model);
    oracle::PlantState s{record.config.x0[0] - xf[0], record.config.x0[1] - xf[1]};
    const double dt = record.trajectory.dt;
    const std::size_t rows = std::max<std::size_t>(record.trajectory.points.size(), 1);
    for (std::size_t j = 0; j < rows; ++j) {
      const double u = oracle::bang_bang_control(s);
      os << j << ',' << fmt17(static_cast<double>(j) * dt) << ',' << fmt17(s.x + xf[0]) << ',' << fmt17(s.y + xf[1])
         << ',' << fmt17(u) << '\n';
      s = {s.x + dt * s.y, s.y + dt * u};
    }
    if (!os) throw Error("cannot write " + files.nominal_csv.string());
  }
  return files;
}

RunAggregates load_and_check(const std::filesystem::path& csv, const std::filesystem::path& summary) {
  std::ifstream cs(csv);
  if (!cs) throw Error("cannot open " + csv.string());
  const Trajectory traj = read_trajectory_csv(cs);

  std::ifstream ss(summary);
  if (!ss) throw Error("cannot open " + summary.string());
  const nlohmann::json j = nlohmann::json::parse(ss);
  const MpcConfig config = config_from_json(j.at("config"));
  const RunAggregates recomputed = compute_aggregates(traj, target_state(config.model));

  const auto& a = j.at("aggregates");
  RunAggregates stored;
  stored.solved_steps = a.at("solved_steps").get<std::size_t>();
  stored.total_gmres_iterations = a.at("total_gmres_iterations").get<std::size_t>();
  stored.avg_gmres_iterations = a.at("avg_gmres_iterations").get<double>();
  stored.final_state_norm = a.at("final_state_norm").get<double>();
  if (!(stored == recomputed)) throw Error("summary aggregates do not match the trajectory rows");
  return recomputed;
}

std::vector<BenchmarkRow> run_benchmark(const std::vector<std::pair<std::string, MpcConfig>>& configs) {
  std::vector<BenchmarkRow> rows;
  for (const auto& [id, cfg] : configs) {
    const RunRecord rec = run(cfg);
    BenchmarkRow row;
    row.id = id;
    row.success = rec.success;
    row.failure_kind = rec.failure_kind;
    row.avg_iterations = rec.aggregates.avg_gmres_iterations;
    row.avg_wall_ms = rec.avg_wall_ms_per_step;
    rows.push_back(row);
  }
  if (!rows.empty()) {
    const double base = rows.front().avg_iterations;
    for (auto& row : rows) {
      row.speedup = row.avg_iterations > 0.0 ? base / row.avg_iterations : kNaN;
    }
  }
  return rows;
}

void write_benchmark_csv(std::ostream& os, const std::vector<BenchmarkRow>& rows) {
  os << "config,success,avg_iters,avg_wall_ms_per_step,speedup,failure\n";
  for (const auto& r : rows) {
    os << r.id << ',' << (r.success ? "true" : "false") << ',' << fmt17(r.avg_iterations) << ','
       << fmt17(r.avg_wall_ms) << ',' << fmt17(r.speedup) << ',' << r.failure_kind << '\n';
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("loglog_slope needs at least two paired points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ScalingReport run_scaling(const MpcConfig& base, const std::vector<std::size_t>& horizons, std::size_t repeats) {
  using clock = std::chrono::steady_clock;
  ScalingReport report;
  repeats = std::max<std::size_t>(repeats, 1);
  for (std::size_t n : horizons) {
    MpcConfig cfg = base;
    cfg.horizon = n;
    cfg.validate();
    const ModelDefinition model = make_model(cfg.model);
    // Measured at the converged initial horizon, the point every run starts from.
    const Vector x0(cfg.x0.begin(), cfg.x0.end());
    const HorizonSolution U = cold_start(model, cfg, x0).solution;
    const FdOperator op(model, U, x0, 0.0, cfg.fd_step);
    Vector r = op.base_residual();

    std::vector<double> ta, tf, tp, tt;
    ScalingPoint pt;
    pt.horizon = n;
    for (std::size_t k = 0; k < repeats; ++k) {
      const auto t0 = clock::now();
      const SparsePreconditioner m = assemble(model, U, x0, 0.0, op);
      const auto t1 = clock::now();
      const PreconditionerFactors f = factorize(m);
      const auto t2 = clock::now();
      const Vector z = apply_inverse(f, r);
      const auto t3 = clock::now();
      if (!all_finite(z)) throw Error("scaling: preconditioner produced non-finite values");
      ta.push_back(std::chrono::duration<double>(t1 - t0).count());
      tf.push_back(std::chrono::duration<double>(t2 - t1).count());
      tp.push_back(std::chrono::duration<double>(t3 - t2).count());
      tt.push_back(std::chrono::duration<double>(t3 - t0).count());
      if (k == 0) {
        pt.memory_bytes = f.memory_bytes();
        pt.flops = f.flops();
      }
    }
    pt.assemble_seconds = median(ta);
    pt.factorize_seconds = median(tf);
    pt.apply_seconds = median(tp);
    pt.total_seconds = median(tt);
    report.points.push_back(pt);
  }
  if (report.points.size() >= 2) {
    std::vector<double> ns, ts, ms, fs;
    for (const auto& p : report.points) {
      ns.push_back(static_cast<double>(p.horizon));
      ts.push_back(p.total_seconds);
      ms.push_back(static_cast<double>(p.memory_bytes));
      fs.push_back(static_cast<double>(p.flops));
    }
    report.time_slope = loglog_slope(ns, ts);
    report.memory_slope = loglog_slope(ns, ms);
    report.flop_slope = loglog_slope(ns, fs);
  }
  return report;
}

void write_scaling_csv(std::ostream& os, const ScalingReport& report) {
  os << "N,assemble_s,factorize_s,apply_s,total_s,memory_bytes,flops\n";
  for (const auto& p : report.points) {
    os << p.horizon << ',' << fmt17(p.assemble_seconds) << ',' << fmt17(p.factorize_seconds) << ','
       << fmt17(p.apply_seconds) << ',' << fmt17(p.total_seconds) << ',' << p.memory_bytes << ',' << p.flops << '\n';
  }
}

}  // namespace nkmpc::harness
